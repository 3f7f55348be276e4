import copy
from fractions import Fraction
from pathlib import Path
import tempfile
import unittest

import json
import numpy as np
import pandas as pd
import pytest

from thermal_cluster import Q_
from thermal_cluster.utils import (
    PrintTable,
    UpdateDict,
    csv_with_metadata,
    dumps_json,
    encoder,
    load_and_merge,
    write_atomic,
)


@pytest.mark.unittest
class TestMerge(unittest.TestCase):
    """test for the dictionary merge"""

    def test_integer(self):
        """test that simple integer dict can be merged"""
        a = {"a": 10, "b": 20}
        b = {"c": 30, "d": 40}
        c = {"x": 1}
        ans = {"a": 10, "b": 20, "c": 30, "d": 40, "x": 1}
        ud = UpdateDict(a, b, c)
        self.assertDictEqual(ud.main, ans)

    def test_string(self):
        """tests basic string"""
        a = {"decoder": "pymatching", "b": "foo"}
        b = {"decoder": "networkx"}
        UpdateDict(a, b)
        assert a["decoder"] == "networkx"

    def test_nested_string(self):
        """tests a nested string"""
        a = {"a": "hello"}
        b = {"world": {"foo": "bar", "test_name": "test_param"}}
        c = {"world": {"test_name": "other_test_param"}}
        ans = {"a": "hello", "world": {"foo": "bar", "test_name": "other_test_param"}}
        ud = UpdateDict(a, b, c)
        self.assertDictEqual(ud.main, ans)

    def test_lists_replaced(self):
        """a grid in an override replaces the default grid"""
        a = {"sizes": [3, 5, 7]}
        UpdateDict(a, {"sizes": [9]})
        assert a["sizes"] == [9]

    def test_int_float_mix(self):
        a = {"delta": 1}
        UpdateDict(a, {"delta": 2.5})
        assert a["delta"] == 2.5

    def test_order(self):
        """tests the order of the dictionary does not matter"""
        defaults = {"run": {"sizes": [3, 5], "trials": 100}, "seed": 1}
        override = {"run": {"decoder": "networkx"}, "output_dir": "./out"}
        defaults2 = copy.deepcopy(defaults)
        override2 = copy.deepcopy(override)
        UpdateDict(defaults, override)
        UpdateDict(override2, defaults2)
        assert defaults == override2

    def test_load_and_merge(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = Path(tmp) / "a.json"
            second = Path(tmp) / "b.json"
            first.write_text(json.dumps({"trials": 10, "seed": 1}))
            second.write_text(json.dumps({"trials": 20}))
            assert load_and_merge([first, second]) == {"trials": 20, "seed": 1}


@pytest.mark.unittest
class TestEncoder(unittest.TestCase):
    def test_fraction(self):
        assert encoder(Fraction(-2, 5)) == "-2/5"
        assert encoder({"q1": [Fraction(1, 3)]}) == {"q1": ["1/3"]}

    def test_numpy(self):
        assert encoder(np.float64(0.5)) == 0.5
        assert type(encoder(np.int64(3))) is int
        assert encoder(np.array([1, 2])) == [1, 2]
        assert encoder((1, 2)) == [1, 2]

    def test_quantity(self):
        assert encoder(Q_(1.2, "meV")) == "1.2 millielectron_volt"

    def test_path(self):
        assert encoder(Path("out") / "curves.csv") == str(Path("out") / "curves.csv")


@pytest.mark.unittest
class TestWriters(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_write_atomic(self):
        path = self.dir / "nested" / "out.txt"
        write_atomic(path, "first\n")
        write_atomic(path, "second\n")
        assert path.read_text() == "second\n"
        assert [p.name for p in path.parent.iterdir()] == ["out.txt"]

    def test_write_atomic_failure_keeps_file(self):
        """a failed write leaves the previous file untouched"""
        path = self.dir / "out.txt"
        write_atomic(path, "kept\n")
        with self.assertRaises(TypeError):
            write_atomic(path, None)
        assert path.read_text() == "kept\n"
        assert [p.name for p in self.dir.iterdir()] == ["out.txt"]

    def test_dumps_json(self):
        text = dumps_json({"b": 1, "a": Fraction(1, 2)})
        assert text == '{\n  "a": "1/2",\n  "b": 1\n}\n'

    def test_csv_with_metadata(self):
        frame = pd.DataFrame({"T": [0.05, 0.1], "q1": [1 / 3, 2e-9]})
        text = csv_with_metadata(frame, {"seed": 7, "config": {"trials": 2}})
        lines = text.split("\n")
        assert lines[0] == "# seed: 7"
        assert lines[1] == '# config: {"trials": 2}'
        assert lines[2] == "T,q1"
        assert lines[3] == "0.05,0.333333333333"
        assert lines[4] == "0.1,2e-09"
        assert text.endswith("\n")
        assert "\r" not in text


@pytest.mark.unittest
class TestPrintTable(unittest.TestCase):
    def test_header(self):
        table = PrintTable(pd.DataFrame({"L": [3], "rate": [0.1]}))
        assert table.header == ["L", "rate"]

    def test_new_line(self):
        table = PrintTable(pd.DataFrame({"a": [1]}))
        assert table.new_line_in_string("abcdef", 4) == "abcd\nef"
        assert table.new_line_in_string(1.5, 4) == 1.5

    def test_str(self):
        text = str(PrintTable(pd.DataFrame({"L": [3, 5], "rate": [0.1, 0.2]})))
        assert "rate" in text
        assert "0.2" in text


if __name__ == "__main__":
    unittest.main()
