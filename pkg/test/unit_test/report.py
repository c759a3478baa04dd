import json
from pathlib import Path

import pytest

from robust_bond_pricer.model import OutputFormat
from robust_bond_pricer.report import companion_path, render_table, to_frame, write_table

_ROWS = [
    {"a": 1, "b": 0.1234567890123456, "pass": True},
    {"a": 2, "c": None, "pass": False},
]


class TestRenderTable:
    def test_columns_keep_first_occurrence_order(self):
        assert list(to_frame(_ROWS).columns) == ["a", "b", "pass", "c"]

    def test_csv(self):
        assert render_table(_ROWS, OutputFormat.CSV) == "a,b,pass,c\n1,0.123456789012,True,\n2,,False,\n"

    def test_json(self):
        records = json.loads(render_table(_ROWS, OutputFormat.JSON))
        assert records[0]["b"] == 0.123456789012
        assert records[0]["pass"] is True
        assert records[1]["c"] is None
        assert records[1]["pass"] is False

    def test_deterministic(self):
        assert render_table(_ROWS, OutputFormat.CSV) == render_table(list(_ROWS), OutputFormat.CSV)


class TestWriteTable:
    def test_creates_parent_directories(self, tmp_path: Path):
        target = tmp_path / "nested" / "dir" / "out.csv"
        assert write_table(_ROWS, target, OutputFormat.CSV) == target
        assert target.read_text(encoding="utf-8").startswith("a,b,pass,c\n")

    def test_unwritable_target(self, tmp_path: Path):
        with pytest.raises(OSError) as error:
            write_table(_ROWS, tmp_path, OutputFormat.CSV)
        assert str(tmp_path) in str(error.value)


@pytest.mark.parametrize(
    "path, label, output_format, expected",
    [
        ("out.csv", "validation", None, "out.validation.csv"),
        ("runs/out.json", "martingale", OutputFormat.JSON, "runs/out.martingale.json"),
        ("out", "validation", OutputFormat.JSON, "out.validation.json"),
        ("out", "validation", None, "out.validation"),
    ],
)
def test_companion_path(path: str, label: str, output_format, expected: str):
    assert companion_path(path, label, output_format) == Path(expected)
