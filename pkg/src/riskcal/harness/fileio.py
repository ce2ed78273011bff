"""On-disk formats: risk-matrix CSV + JSON manifest, result and report JSON.

Numbers are serialized with full round-trip precision (repr for floats),
and JSON objects are written with sorted keys, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..core import (
    CalibrationResult,
    HyperGrid,
    ParseError,
    RiskMatrix,
    SchemaError,
)

__all__ = [
    "write_json",
    "read_json",
    "write_risk_matrix",
    "load_risk_matrix",
    "write_values_csv",
    "load_values_csv",
    "write_result",
    "load_result",
]

MANIFEST_KEYS = {"grid", "bounded_unit", "rewards_csv"}


def write_json(path: str | Path, payload: Mapping[str, Any]) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def read_json(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{p}: invalid JSON at line {e.lineno}, column {e.colno}") from e


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_values_csv(path: str | Path, values: np.ndarray, ids) -> None:
    """CSV with header ``episode,<id0>,<id1>,...`` and one row per episode."""
    lines = ["episode," + ",".join(str(i) for i in ids)]
    for i, row in enumerate(values):
        lines.append(f"{i}," + _format_row(row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_values_csv(path: str | Path) -> tuple[np.ndarray, list[int]]:
    """Parse a values CSV; returns (matrix, column ids)."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    lines = [ln for ln in p.read_text().splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError(f"{p}: empty file")
    header = lines[0].split(",")
    if header[0] != "episode":
        raise ParseError(f"{p}: line 1: header must start with 'episode', got {header[0]!r}")
    try:
        ids = [int(c) for c in header[1:]]
    except ValueError:
        raise ParseError(f"{p}: line 1: non-integer column id in header") from None
    if not ids:
        raise ParseError(f"{p}: line 1: no value columns")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(ids) + 1:
            raise ParseError(
                f"{p}: line {lineno}: expected {len(ids) + 1} cells, got {len(cells)}"
            )
        row = []
        for col, cell in enumerate(cells[1:], start=2):
            try:
                row.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{p}: line {lineno}, column {col}: non-numeric cell {cell!r}"
                ) from None
        rows.append(row)
    if not rows:
        raise ParseError(f"{p}: no data rows")
    return np.array(rows, dtype=np.float64), ids


def write_risk_matrix(
    csv_path: str | Path,
    manifest_path: str | Path,
    m: RiskMatrix,
    grid: HyperGrid,
    rewards_csv: str | None = None,
) -> None:
    write_values_csv(csv_path, m.values, grid.ids)
    manifest = {
        "grid": grid.to_dict(),
        "bounded_unit": m.bounded_unit,
        "rewards_csv": rewards_csv,
    }
    write_json(manifest_path, manifest)


def load_risk_matrix(
    csv_path: str | Path, manifest_path: str | Path
) -> tuple[RiskMatrix, HyperGrid, str | None]:
    """Load the external risk-matrix format; validates header against manifest."""
    manifest = read_json(manifest_path)
    unknown = set(manifest) - MANIFEST_KEYS
    if unknown:
        raise SchemaError(f"{manifest_path}: unknown manifest keys {sorted(unknown)}")
    missing = {"grid", "bounded_unit"} - set(manifest)
    if missing:
        raise SchemaError(f"{manifest_path}: missing manifest keys {sorted(missing)}")
    grid = HyperGrid.from_dict(manifest["grid"])
    values, ids = load_values_csv(csv_path)
    if ids != list(grid.ids):
        raise SchemaError(
            f"{csv_path}: header ids do not match manifest grid "
            f"({len(ids)} columns vs {len(grid)} points)"
        )
    m = RiskMatrix(values=values, bounded_unit=manifest["bounded_unit"])
    return m, grid, manifest.get("rewards_csv")


def write_result(path: str | Path, result: CalibrationResult) -> None:
    write_json(path, result.to_dict())


def load_result(path: str | Path) -> CalibrationResult:
    return CalibrationResult.from_dict(read_json(path))
