"""Reader for the harness CSV format: '#' metadata comments + header + rows."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["FigureError", "MalformedCsvError", "MissingColumnError",
           "FigureTable", "read_table"]


class FigureError(Exception):
    pass


class MalformedCsvError(FigureError):
    pass


class MissingColumnError(FigureError):
    pass


@dataclass
class FigureTable:
    columns: list[str]
    rows: list[dict[str, str]]
    meta: dict[str, str] = field(default_factory=dict)
    markers: dict[str, float] = field(default_factory=dict)

    def require(self, *names: str) -> None:
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise MissingColumnError(f"missing column(s) {missing}; have {self.columns}")

    def floats(self, column: str, rows=None) -> list[float]:
        self.require(column)
        out = []
        for row in self.rows if rows is None else rows:
            cell = row[column]
            if cell == "":
                continue
            try:
                out.append(float(cell))
            except ValueError:
                raise MalformedCsvError(f"non-numeric value {cell!r} in column {column}") from None
        return out


def read_table(path: str | Path) -> FigureTable:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    meta: dict[str, str] = {}
    markers: dict[str, float] = {}
    header: list[str] | None = None
    rows: list[dict[str, str]] = []
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("marker "):
                parts = dict(kv.split("=", 1) for kv in body[len("marker "):].split())
                try:
                    markers[parts["method"]] = float(parts["value"])
                except (KeyError, ValueError):
                    raise MalformedCsvError(f"{p}: line {lineno}: bad marker comment") from None
            elif ":" in body:
                key, value = body.split(":", 1)
                meta[key.strip()] = value.strip()
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            continue
        if len(cells) != len(header):
            raise MalformedCsvError(
                f"{p}: line {lineno}: expected {len(header)} cells, got {len(cells)}"
            )
        rows.append(dict(zip(header, cells)))
    if header is None:
        raise MalformedCsvError(f"{p}: no header line")
    if not rows:
        raise MalformedCsvError(f"{p}: no data rows")
    return FigureTable(columns=header, rows=rows, meta=meta, markers=markers)
