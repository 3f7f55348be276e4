import os
from pathlib import Path
import tempfile
import unittest
from unittest.mock import patch

import json
import pandas as pd
import pytest

from thermal_cluster.base import THREADS_ENV, BaseConfig, ConfigurationError
from thermal_cluster.cli import (
    EXIT_NO_CROSSING,
    EXIT_OK,
    EXIT_USAGE,
    MCONNECT_COLUMNS,
    main,
    parse_value,
)
from thermal_cluster.rhgmc import SCAN_COLUMNS, NoCrossingError, ThresholdEstimate
from thermal_cluster.utils import change_handler


def read_table(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def read_metadata(path: Path) -> dict:
    metadata = {}
    with open(path, "r") as f:
        for line in f:
            if not line.startswith("# "):
                break
            key, value = line[2:].split(": ", 1)
            metadata[key] = json.loads(value)
    return metadata


def fake_scan() -> pd.DataFrame:
    rows = [
        [L, p, 100, failures, failures / 100, 0.0, 1.0]
        for L, failures in ((3, 10), (5, 5))
        for p in (0.02, 0.03, 0.04)
    ]
    return pd.DataFrame(rows, columns=SCAN_COLUMNS)


class CliCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory(prefix="thermal_cluster_")
        self.out = Path(self.tmp.name)

    def tearDown(self):
        change_handler("./run.log")
        BaseConfig.reset()
        self.tmp.cleanup()

    def run_main(self, *argv, out=None) -> int:
        return main([*argv, "--output_dir", str(out or self.out)])


@pytest.mark.unittest
class TestParsing(CliCase):
    def test_parse_value(self):
        assert parse_value("3") == 3
        assert parse_value("0.5") == 0.5
        assert parse_value("3,5,7") == [3, 5, 7]
        assert parse_value("[8.0, 10.0]") == [8.0, 10.0]
        assert parse_value("networkx") == "networkx"
        assert parse_value("1.2 meV") == "1.2 meV"

    def test_unknown_subcommand(self):
        assert main(["bogus"]) == EXIT_USAGE

    def test_bad_trials(self):
        assert self.run_main("threshold", "--trials", "0") == EXIT_USAGE

    def test_missing_config_file(self):
        missing = str(self.out / "missing.json")
        assert self.run_main("curves", "--config", missing) == EXIT_USAGE

    def test_config_file(self):
        path = self.out / "config.json"
        path.write_text(json.dumps({"temperature": 0.3, "seed": 7}))
        assert self.run_main("channel", "--config", str(path), "--seed", "11") == EXIT_OK
        metadata = read_metadata(self.out / "channel.csv")
        assert metadata["temperature"] == 0.3
        assert metadata["seed"] == 11

    def test_config_files_merged(self):
        """later config files override earlier ones"""
        first = self.out / "first.json"
        second = self.out / "second.json"
        first.write_text(json.dumps({"temperature": 0.3, "seed": 7}))
        second.write_text(json.dumps({"seed": 9}))
        assert self.run_main("channel", "--config", str(first), str(second)) == EXIT_OK
        metadata = read_metadata(self.out / "channel.csv")
        assert metadata["temperature"] == 0.3
        assert metadata["seed"] == 9

    def test_config_file_not_object(self):
        path = self.out / "config.json"
        path.write_text(json.dumps([1, 2]))
        assert self.run_main("curves", "--config", str(path)) == EXIT_USAGE

    def test_hyphen_alias(self):
        assert self.run_main("channel", "--n-cor", "3") == EXIT_OK
        assert BaseConfig.n_cor == 3


@pytest.mark.unittest
class TestThreadsEnvironment(CliCase):
    def test_override(self):
        with patch.dict(os.environ, {THREADS_ENV: "3"}):
            assert BaseConfig.threads == 3

    def test_auto(self):
        with patch.dict(os.environ, {THREADS_ENV: "auto"}):
            assert BaseConfig.threads == (os.cpu_count() or 1)

    def test_bad_value(self):
        with patch.dict(os.environ, {THREADS_ENV: "0"}):
            with self.assertRaises(ConfigurationError):
                BaseConfig.threads


@pytest.mark.integrationtest
class TestCurves(CliCase):
    def test_curves(self):
        assert self.run_main("curves") == EXIT_OK
        table = read_table(self.out / "curves.csv")
        assert len(table) == 10
        assert table["q1"].is_monotonic_increasing
        metadata = read_metadata(self.out / "curves.csv")
        assert metadata["seed"] == 20120601
        assert "threads" not in metadata["config"]

    def test_reproducible(self):
        """reruns give byte identical files whatever the thread count"""
        other = self.out / "second"
        assert self.run_main("curves") == EXIT_OK
        assert self.run_main("curves", "--threads", "2", out=other) == EXIT_OK
        first = (self.out / "curves.csv").read_bytes()
        second = (other / "curves.csv").read_bytes()
        assert first == second

    def test_channel(self):
        assert self.run_main("channel", "--temperature", "0.15") == EXIT_OK
        table = read_table(self.out / "channel.csv")
        assert len(table) == 16
        assert abs(table["probability"].sum() - 1) < 1e-9
        assert read_metadata(self.out / "channel.csv")["coherence_residual"] <= 1e-3


@pytest.mark.integrationtest
class TestMergeCommands(CliCase):
    def test_ghz5(self):
        assert self.run_main("ghz5") == EXIT_OK
        with open(self.out / "ghz5.json", "r") as f:
            report = json.load(f)
        assert report["all_match"]
        assert report["matches_paper"]
        assert "matches_reference" not in report
        assert all(report["matches_paper"].values())
        assert report["stabilizer_count"] == 5
        assert report["output_qubits"] == ["1", "2", "6", "7", "8"]
        assert report["normalization"] == "1"
        assert report["dense_check"]["dense_vs_first_order"] < 1e-6
        assert report["seed"] == 20120601

    def test_mconnect(self):
        code = self.run_main("mconnect", "--m_list", "10,3", "--beta_list", "[8.0]")
        assert code == EXIT_OK
        table = read_table(self.out / "mconnect.csv")
        assert list(table.columns) == MCONNECT_COLUMNS
        assert table["m"].tolist() == [10, 3]
        row = table[table["m"] == 3].iloc[0]
        assert row["beta_shifted"] == 8.0
        assert row["gap"] == 0.0

    def test_bad_m(self):
        assert self.run_main("mconnect", "--m_list", "2,3") == EXIT_USAGE


@pytest.mark.unittest
class TestThresholdCommand(CliCase):
    @patch("thermal_cluster.cli.estimate_threshold")
    def test_no_crossing(self, estimate):
        estimate.side_effect = NoCrossingError("no crossing", "above", fake_scan())
        assert self.run_main("threshold") == EXIT_NO_CROSSING
        with open(self.out / "threshold.json", "r") as f:
            report = json.load(f)
        assert report["status"] == "no_crossing"
        assert report["direction"] == "above"
        assert len(read_table(self.out / "threshold.csv")) == 6

    @patch("thermal_cluster.cli.estimate_threshold")
    def test_success(self, estimate):
        estimate.return_value = ThresholdEstimate(
            0.029, (0.027, 0.031), [3, 5], 100, "pymatching", {"3-5": 0.029}, fake_scan()
        )
        assert self.run_main("threshold", "--delta", "1.2 meV", "--sizes", "3,5") == EXIT_OK
        with open(self.out / "threshold.json", "r") as f:
            report = json.load(f)
        assert report["status"] == "ok"
        assert report["p_star"] == 0.029
        assert report["confidence_interval"] == [0.027, 0.031]
        assert 0.15 <= report["T_star_over_delta"] <= 0.21
        assert sorted(report["T_star_over_delta_by_n_cor"]) == ["0", "1", "2", "3", "4"]
        assert report["T_star_over_delta_by_n_cor"]["2"] == report["T_star_over_delta"]
        assert report["T_star_kelvin"].endswith("kelvin")
        kelvin = float(report["T_star_kelvin"].split()[0])
        assert kelvin == pytest.approx(report["T_star_over_delta"] * 13.9254, rel=1e-3)
        with open(self.out / "threshold_timing.json", "r") as f:
            timing = json.load(f)
        assert timing["threads"] == 1
        assert timing["wall_time_s"] >= 0
        assert len(read_table(self.out / "threshold.csv")) == 6

    @patch("thermal_cluster.cli.estimate_threshold")
    def test_unitless_delta(self, estimate):
        estimate.return_value = ThresholdEstimate(
            0.029, (0.027, 0.031), [3, 5], 100, "pymatching", {"3-5": 0.029}, fake_scan()
        )
        assert self.run_main("threshold") == EXIT_OK
        with open(self.out / "threshold.json", "r") as f:
            report = json.load(f)
        assert report["T_star_kelvin"] is None


@pytest.mark.integrationtest
class TestAll(CliCase):
    @patch("thermal_cluster.cli.estimate_threshold")
    def test_all(self, estimate):
        estimate.return_value = ThresholdEstimate(
            0.029, (0.027, 0.031), [3, 5], 100, "pymatching", {"3-5": 0.029}, fake_scan()
        )
        assert self.run_main("all") == EXIT_OK
        for name in ("curves.csv", "channel.csv", "ghz5.json", "mconnect.csv", "threshold.json"):
            assert (self.out / name).exists()
        assert (self.out / "run.log").exists()
        with open(self.out / "pipeline.json", "r") as f:
            pipeline = json.load(f)
        assert list(pipeline["order"].values()) == ["curves", "channel", "ghz5", "mconnect", "threshold"]
        assert pipeline["details"]["ghz5"]["function"] == "thermal_cluster.cli.cmd_ghz5"
        assert pipeline["details"]["curves"]["args"][0]["seed"] == 20120601
        assert set(pipeline["timings"]) == set(pipeline["details"])


if __name__ == "__main__":
    unittest.main()
