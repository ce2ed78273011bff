"""Figure rendering for calibration-harness CSV outputs.

These scripts draw what the harness wrote and nothing else: quantile
markers and target-level lines come verbatim from the CSV metadata, never
from recomputation.
"""

from .csvio import FigureError, FigureTable, MalformedCsvError, MissingColumnError, read_table

__all__ = [
    "FigureError",
    "FigureTable",
    "MalformedCsvError",
    "MissingColumnError",
    "read_table",
]
