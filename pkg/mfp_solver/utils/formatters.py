"""
Artifact formatting utilities.

Formats run results into CSV rows and JSON documents. Floats are written
with shortest round-trip formatting so re-reading reproduces every value.
"""

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel


def format_float(value: Optional[float]) -> str:
    """
    Format a float with shortest round-trip precision.

    Args:
        value: Number to format, or None for an empty cell.

    Returns:
        repr() of the float, "" for None.

    Example:
        >>> format_float(0.1)
        '0.1'
    """
    if value is None:
        return ""
    return repr(float(value))


def format_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Render rows as CSV text with a header line.

    Floats go through format_float; None becomes an empty cell.

    Args:
        header: Column names.
        rows: Row values.

    Returns:
        CSV text with "\\n" line endings.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([
            format_float(cell) if isinstance(cell, float) or cell is None else cell
            for cell in row
        ])
    return buffer.getvalue()


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write CSV text produced by format_csv to path"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_csv(header, rows), encoding="utf-8")
    return path


def read_csv(path: Union[str, Path]) -> List[dict[str, str]]:
    """Read a CSV file written by write_csv into a list of row dicts"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def write_json(path: Union[str, Path], model: BaseModel) -> Path:
    """
    Write a Pydantic model as indented JSON.

    Args:
        path: Target file.
        model: Model to serialize (RunSummary, RunFailure, ...).

    Returns:
        Path: The written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def canonical_json(model: BaseModel) -> str:
    """Key-sorted compact JSON used for config hashing"""
    return json.dumps(model.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
