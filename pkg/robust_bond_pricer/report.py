"""
Tabular emission of run results. Rows keep the column order of their first occurrence and
floats carry 12 significant digits, so two runs with the same configuration diff cleanly.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from robust_bond_pricer.model import OutputFormat

logger = logging.getLogger(__name__)

FLOAT_FORMAT: str = "%.12g"

Row = Dict[str, Any]


def _columns(rows: Sequence[Row]) -> List[str]:
    columns: List[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    return columns


def to_frame(rows: Sequence[Row]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=_columns(rows))


def _significant(value: Any) -> Any:
    if isinstance(value, float) and pd.notna(value):
        return float(FLOAT_FORMAT % value)
    return value


def render_table(rows: Sequence[Row], output_format: OutputFormat) -> str:
    frame = to_frame(rows)
    if output_format is OutputFormat.JSON:
        rounded = frame.apply(lambda column: column.map(_significant)) if len(frame) else frame
        return rounded.to_json(orient="records", indent=2, double_precision=15) + "\n"
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_table(rows: Sequence[Row], path: Union[str, Path], output_format: OutputFormat) -> Path:
    """
    Write ``rows`` to ``path``.

    Raises:
        OSError: If the file cannot be written; the message carries the path
    """
    path = Path(path)
    text = render_table(rows, output_format)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        logger.error(f"Cannot write report {path}: {e}")
        raise OSError(f"cannot write report {path}: {e.strerror or e}") from e
    logger.info(f"Wrote {len(rows)} row(s) to {path}")
    return path


def companion_path(path: Union[str, Path], label: str, output_format: Optional[OutputFormat] = None) -> Path:
    """Path of a secondary artifact next to ``path``: ``out.csv`` → ``out.<label>.csv``."""
    path = Path(path)
    suffix = path.suffix or (f".{output_format.value}" if output_format is not None else "")
    return path.with_name(f"{path.stem}.{label}{suffix}")
