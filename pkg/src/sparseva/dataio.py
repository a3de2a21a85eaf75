"""CSV schemas for signals (``u,y``) and regression data (``y,phi_1..phi_n``).

Floats are written with ``repr`` so that reading a file back gives the
exact same doubles.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .core import InvalidConfigError, RegressionProblem


class DataFormatError(InvalidConfigError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DataFile(NamedTuple):
    kind: str  # "signal" or "regression"
    columns: list
    values: np.ndarray  # rows x columns

    @property
    def u(self):
        return self.values[:, 0]

    @property
    def y(self):
        return self.values[:, 1] if self.kind == "signal" else self.values[:, 0]

    def regression(self) -> RegressionProblem:
        if self.kind != "regression":
            raise InvalidConfigError("file holds signals, not a regression")
        return RegressionProblem(self.values[:, 1:].T, self.values[:, 0])


def _fmt(x: float) -> str:
    return repr(float(x))


def _classify(header: list) -> str:
    names = [h.strip() for h in header]
    if names == ["u", "y"]:
        return "signal"
    if len(names) >= 2 and names[0] == "y" and names[1:] == [f"phi_{i}" for i in range(1, len(names))]:
        return "regression"
    raise DataFormatError(f"unrecognized header {','.join(names)!r}; expected 'u,y' or 'y,phi_1,...,phi_n'", 1)


def read_data_csv(path) -> DataFile:
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot open {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", 1) from None
        kind = _classify(header)
        width = len(header)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DataFormatError(f"expected {width} fields, found {len(row)}", line)
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataFormatError(f"non-numeric field in {row!r}", line) from None
            if not all(math.isfinite(v) for v in vals):
                raise DataFormatError("non-finite value", line)
            rows.append(vals)
    if not rows:
        raise DataFormatError("no data rows", 2)
    return DataFile(kind, [h.strip() for h in header], np.asarray(rows, dtype=float))


def write_signal_csv(path, u, y) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("u,y\n")
        for a, b in zip(np.asarray(u, dtype=float), np.asarray(y, dtype=float)):
            fh.write(f"{_fmt(a)},{_fmt(b)}\n")


def write_regression_csv(path, problem: RegressionProblem) -> None:
    n = problem.n
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["y"] + [f"phi_{i}" for i in range(1, n + 1)]) + "\n")
        for j in range(problem.N):
            fh.write(",".join([_fmt(problem.y[j])] + [_fmt(v) for v in problem.phi[:, j]]) + "\n")


def write_records_csv(path, header: list, rows) -> None:
    """Write dict rows in ``header`` order; floats use ``repr``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row[h]) for h in header])


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v
