"""Command line front end of the thermal cluster pipeline.

Each subcommand writes one output of the pipeline into the configured
output directory. Every file embeds the configuration and seed it was
produced with.
"""
import argparse
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence, Type

from box import Box
import pandas as pd

from thermal_cluster import run_log
from thermal_cluster.base import (
    DEFAULTS,
    BaseConfig,
    BaseFramework,
    ConfigurationError,
    ConfigurationNotFullyPopulated,
    delta_in_kelvin,
)
from thermal_cluster.merge import (
    beta_shift_check,
    compare_with_reference,
    derive_e5,
    merge_distribution_exact,
    simulate_merge_dense,
    total_variation,
)
from thermal_cluster.rhgmc import (
    NoCrossingError,
    estimate_threshold,
    n_cor_sensitivity,
)
from thermal_cluster.solver import Solver, Step
from thermal_cluster.unitcell import UnitCell, build_unit_cell
from thermal_cluster.utils import PrintTable, csv_with_metadata, dumps_json, write_atomic
from thermal_cluster.zchannel import emit_curves, q_of_beta, thermal_channel

SUBCOMMANDS = ("curves", "channel", "ghz5", "mconnect", "threshold", "all")
MCONNECT_COLUMNS = ["m", "beta", "beta_shifted", "F_m_shifted", "F_4_base", "gap"]
DENSE_CHECK_BETA = 12.0
REFERENCE_T_STAR = {"this model": 0.18, "spin-2 and spin-3/2 model": 0.21}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CROSSING = 2


class UsageError(Exception):
    """Raised for a malformed command line."""

    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        run_log.error(message)
        raise UsageError(message)


def _metadata(config: Type[BaseConfig]) -> dict:
    return dict(config=config.reproducible_dict(), seed=config.seed)


def _cell(config: Type[BaseConfig]) -> UnitCell:
    return build_unit_cell(config.delta_magnitude)


def _report(config: Type[BaseConfig], **fields) -> Box:
    return Box(_metadata(config), **fields, frozen_box=True)


def cmd_curves(config: Type[BaseConfig] = BaseConfig) -> Path:
    """Writes q1, q2, q3 over the temperature grid to curves.csv."""
    frame = emit_curves(_cell(config), config.temperature_grid)
    path = config.output_dir / "curves.csv"
    write_atomic(path, csv_with_metadata(frame, _metadata(config)))
    print(PrintTable(frame))
    return path


def cmd_channel(config: Type[BaseConfig] = BaseConfig) -> Path:
    """Writes the 16 Z string probabilities at one temperature to
    channel.csv."""
    channel = thermal_channel(_cell(config), 1.0 / config.temperature)
    frame = channel.to_frame()
    metadata = dict(
        _metadata(config),
        temperature=config.temperature,
        coherence_residual=channel.coherence_residual,
    )
    path = config.output_dir / "channel.csv"
    write_atomic(path, csv_with_metadata(frame, metadata))
    print(PrintTable(frame))
    return path


def cmd_ghz5(config: Type[BaseConfig] = BaseConfig) -> Path:
    """Writes the derived five-qubit merge channel to ghz5.json.

    The report holds the canonical stabilizers, the exact coefficients,
    their agreement with the reference channel and the total variation
    between the dense simulation and the first order channel.
    """
    merged = derive_e5()
    matches = compare_with_reference(merged)
    cell = _cell(config)
    cell_channel = thermal_channel(cell, DENSE_CHECK_BETA).probs
    first_order = merged.channel.evaluate(*q_of_beta(cell, DENSE_CHECK_BETA).as_tuple())
    dense = simulate_merge_dense(cell_channel)
    exact = merge_distribution_exact(cell_channel)
    derived = merged.to_dict()
    report = _report(
        config,
        output_qubits=derived["output_qubits"],
        stabilizers=derived["stabilizers"],
        stabilizer_count=len(derived["stabilizers"]),
        terms=derived["terms"],
        normalization=derived["normalization"],
        matches_paper=matches,
        all_match=all(matches.values()),
        dense_check=dict(
            delta_beta=DENSE_CHECK_BETA,
            dense_vs_first_order=total_variation(dense, first_order),
            dense_vs_all_orders=total_variation(dense, exact),
        ),
    )
    path = config.output_dir / "ghz5.json"
    write_atomic(path, dumps_json(report.to_dict()))
    if not report.all_match:
        run_log.warning(
            "derived channel differs from the reference in "
            + ", ".join(name for name, ok in matches.items() if not ok)
        )
    return path


def cmd_mconnect(config: Type[BaseConfig] = BaseConfig) -> Path:
    """Writes the inverse temperature shift of m-connected clusters to
    mconnect.csv, one row per (m, beta) with m in configured order."""
    cell = _cell(config)
    cache: dict = {}

    def q1_of_beta(beta: float) -> float:
        if beta not in cache:
            cache[beta] = q_of_beta(cell, beta).q1
        return cache[beta]

    rows = [
        beta_shift_check(m, beta, q1_of_beta).row()
        for m in config.m_list
        for beta in config.beta_list
    ]
    frame = pd.DataFrame(rows, columns=MCONNECT_COLUMNS)
    path = config.output_dir / "mconnect.csv"
    write_atomic(path, csv_with_metadata(frame, _metadata(config)))
    print(PrintTable(frame))
    return path


def cmd_threshold(config: Type[BaseConfig] = BaseConfig) -> Path:
    """Runs the Monte Carlo threshold scan and inverts it to the
    threshold temperature.

    Writes threshold.csv, threshold.json and threshold_timing.json.

    Raises
    ------
    NoCrossingError
        After the counts and a diagnostic threshold.json are written.
    """
    out = config.output_dir
    start = time.perf_counter()
    try:
        estimate = estimate_threshold(
            config.sizes,
            config.p_grid,
            config.trials,
            config.seed,
            decoder=config.decoder,
            threads=config.threads,
            bootstrap=config.bootstrap,
        )
    except NoCrossingError as e:
        if e.scan is not None:
            write_atomic(out / "threshold.csv", csv_with_metadata(e.scan, _metadata(config)))
        report = _report(
            config, status="no_crossing", direction=e.direction, message=str(e), decoder=config.decoder
        )
        write_atomic(out / "threshold.json", dumps_json(report.to_dict()))
        raise
    cell = _cell(config)
    by_n_cor = n_cor_sensitivity(cell, estimate.p_star)
    if config.n_cor not in by_n_cor:
        by_n_cor.update(n_cor_sensitivity(cell, estimate.p_star, [config.n_cor]))
    estimate.T_star_over_delta = by_n_cor[config.n_cor]
    kelvin = delta_in_kelvin(config.delta)
    T_star_kelvin = None
    if kelvin is not None and estimate.T_star_over_delta is not None:
        T_star_kelvin = f"{estimate.T_star_over_delta * kelvin.magnitude:.6g} kelvin"
    report = _report(
        config,
        status="ok",
        decoder=estimate.decoder,
        p_star=estimate.p_star,
        confidence_interval=list(estimate.confidence_interval),
        crossings=estimate.crossings,
        sizes=estimate.sizes,
        trials_per_point=estimate.trials_per_point,
        n_cor=config.n_cor,
        T_star_over_delta=estimate.T_star_over_delta,
        T_star_over_delta_by_n_cor={str(k): v for k, v in sorted(by_n_cor.items())},
        T_star_kelvin=T_star_kelvin,
        reference_T_star_over_delta=REFERENCE_T_STAR,
    )
    wall_time = time.perf_counter() - start
    write_atomic(out / "threshold.csv", csv_with_metadata(estimate.scan, _metadata(config)))
    write_atomic(out / "threshold.json", dumps_json(report.to_dict()))
    write_atomic(
        out / "threshold_timing.json",
        dumps_json(dict(wall_time_s=wall_time, threads=config.threads)),
    )
    run_log.info(f"threshold run took {wall_time:.1f} s")
    print(PrintTable(estimate.scan))
    return out / "threshold.json"


COMMANDS = dict(
    curves=cmd_curves,
    channel=cmd_channel,
    ghz5=cmd_ghz5,
    mconnect=cmd_mconnect,
    threshold=cmd_threshold,
)


def cmd_all(config: Type[BaseConfig] = BaseConfig) -> Solver:
    """Runs every subcommand in pipeline order through the solver.

    The step list and the time each step took are written to
    pipeline.json.
    """
    solver = Solver()
    solver.build_from_step_list([Step(name, command, config) for name, command in COMMANDS.items()])
    solver.solve()
    run_log.info(f"step timings: {solver.timings()}")
    report = dict(solver.to_dict(), timings=solver.timings(), seed=config.seed)
    write_atomic(config.output_dir / "pipeline.json", dumps_json(report))
    return solver


def parse_value(text: str):
    """Reads a flag value as json, a comma separated list or a string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return [parse_value(item.strip()) for item in text.split(",") if item.strip()]
    return text


def build_parser() -> argparse.ArgumentParser:
    """The argument parser with one flag per configuration field."""
    parser = _Parser(
        prog="thermal_cluster",
        description="Thermal GHZ unit cells, their merge channels and the topological threshold.",
    )
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument(
        "--config", type=Path, nargs="+", default=None, help="json configuration files, later ones win"
    )
    for field in DEFAULTS:
        flags = [f"--{field}"]
        if "_" in field:
            flags.append(f"--{field.replace('_', '-')}")
        parser.add_argument(*flags, dest=field, type=parse_value, default=None)
    return parser


def configure(args: argparse.Namespace, config: Type[BaseConfig]) -> Type[BaseConfig]:
    """Defaults, then the config files in order, then the command line
    flags."""
    config.reset()
    overrides = {field: getattr(args, field) for field in DEFAULTS if getattr(args, field) is not None}
    config.define_config(config_dict=overrides, config_path=args.config)
    config.use_output_dir()
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs a subcommand and returns the process exit status.

    Returns
    -------
    int
        0 on success, 1 for a usage or configuration error and 2 when
        the failure curves do not cross on the grid.
    """
    config = BaseFramework._configuration
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
        configure(args, config)
    except (UsageError, ConfigurationError, ConfigurationNotFullyPopulated) as e:
        print(f"thermal_cluster: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "all":
            cmd_all(config)
        else:
            COMMANDS[args.command](config)
    except (ConfigurationError, ConfigurationNotFullyPopulated) as e:
        print(f"thermal_cluster: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NoCrossingError as e:
        print(f"thermal_cluster: {e}", file=sys.stderr)
        return EXIT_NO_CROSSING
    return EXIT_OK


def run(argv: Optional[List[str]] = None):
    sys.exit(main(argv))
