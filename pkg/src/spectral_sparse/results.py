"""Result rows and the CSV files written by the experiment runners."""

from pathlib import Path
from statistics import median
from typing import Iterable
import csv
import math

from .tuning import Metrics, success_probability

__all__ = [
    "RESULT_COLUMNS",
    "SUMMARY_COLUMNS",
    "ResultRow",
    "write_rows",
    "read_rows",
    "write_results",
    "read_results",
    "summarize",
]

RESULT_COLUMNS = [
    "algorithm", "m", "n", "s", "snr_db", "alpha", "rerror", "iterations",
    "time_ms", "success", "seed",
]
"""Exact header of results.csv."""

SUMMARY_COLUMNS = [
    "algorithm", "m", "n", "trials", "median_rerror", "median_time_ms",
    "median_iterations", "success_rate",
]

_INT_KEYS = {"m", "n", "s", "iterations", "seed", "trials"}
_BOOL_KEYS = {"success"}
_STR_KEYS = {"algorithm", "regime", "rule", "family"}


class ResultRow(dict):
    """ One row of results.csv: a single algorithm run on a single trial."""

    KEYS = RESULT_COLUMNS

    def __init__(self, **values):
        missing = [k for k in self.KEYS if k not in values]
        if missing:
            raise KeyError(f"Result row misses {', '.join(missing)}.")
        super().__init__((k, values[k]) for k in self.KEYS)

    def _hasattr(self, key):
        if key not in self.KEYS:
            raise AttributeError(f'{self.__class__.__name__} has no attribute "{key}"')

    def __getattr__(self, attr):
        self._hasattr(attr)
        return self[attr]

    def __setattr__(self, attr, value):
        self._hasattr(attr)
        self[attr] = value

    def metrics(self) -> Metrics:
        """ The evaluation part of the row."""
        return Metrics(
            rerror=self["rerror"],
            wall_time_ms=self["time_ms"],
            iterations=self["iterations"],
            success=self["success"],
        )


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        # repr is the shortest string that reads back to the same float.
        return repr(value)
    return str(value)


def _parse(key: str, text: str):
    if key in _BOOL_KEYS or text in {"true", "false"}:
        return text == "true"
    if key in _INT_KEYS:
        return int(text)
    if key in _STR_KEYS:
        return text
    try:
        return float(text)
    except ValueError:
        return text


def write_rows(path: Path | str, rows: Iterable[dict], columns: list[str]) -> Path:
    """ Write dictionaries as CSV with a fixed column order."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as file:
        writer = csv.DictWriter(file, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format(row[k]) for k in columns})
    return path


def read_rows(path: Path | str) -> list[dict]:
    """ Read a CSV written by `write_rows`, converting values back to Python types."""
    with open(path, newline="", encoding="utf-8") as file:
        return [{k: _parse(k, v) for k, v in row.items()} for row in csv.DictReader(file)]


def write_results(path: Path | str, rows: Iterable[ResultRow]) -> Path:
    return write_rows(path, rows, RESULT_COLUMNS)


def read_results(path: Path | str) -> list[ResultRow]:
    """ Read results.csv back into result rows.

    Raises:
        ValueError: If the header is not the results header.
    """
    with open(path, newline="", encoding="utf-8") as file:
        header = file.readline().strip().split(",")
    if header != RESULT_COLUMNS:
        raise ValueError(f'"{path}" is not a results file (header {header}).')
    return [ResultRow(**row) for row in read_rows(path)]


def summarize(rows: Iterable[ResultRow]) -> list[dict]:
    """ Per (algorithm, m, n) medians and success rate, sorted by those keys."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.algorithm, row.m, row.n), []).append(row)

    summary = []
    for (algorithm, m, n), members in sorted(groups.items()):
        finite = [e.rerror for e in members if not math.isnan(e.rerror)]
        summary.append({
            "algorithm": algorithm,
            "m": m,
            "n": n,
            "trials": len(members),
            "median_rerror": float(median(finite)) if finite else math.nan,
            "median_time_ms": float(median(e.time_ms for e in members)),
            "median_iterations": float(median(e.iterations for e in members)),
            "success_rate": success_probability([e.metrics() for e in members]),
        })
    return summary
