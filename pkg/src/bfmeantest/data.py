"""CSV datasets with group labels and pairwise testing across groups."""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import PbConfig
from .bf import DEFAULT_K
from .core import InputError, pooled_summary
from .registry import evaluate, parse_tests

_MISSING = {"", "na", "nan", "null", "none", "?"}


@dataclass(frozen=True)
class DatasetTable:
    """Observations by variables with one group label per row."""

    X: np.ndarray
    labels: tuple
    variable_names: tuple | None = None

    def __post_init__(self):
        if self.X.shape[0] != len(self.labels):
            raise InputError(f"{self.X.shape[0]} rows but {len(self.labels)} labels")

    @property
    def groups(self) -> tuple:
        """Distinct labels in order of first appearance."""
        return tuple(dict.fromkeys(self.labels))

    def group(self, label) -> np.ndarray:
        mask = np.array([lab == label for lab in self.labels])
        return self.X[mask]

    def group_sizes(self) -> dict:
        return {g: int(sum(lab == g for lab in self.labels)) for g in self.groups}


def _read_rows(path, delimiter):
    with open(path, newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh, delimiter=delimiter) if row]


def load_csv(path, has_header: bool = True, label_column: str | int | None = None,
             label_file=None, delimiter: str = ",") -> DatasetTable:
    """Read a numeric table with group labels.

    Labels come from ``label_column`` (a header name, or a zero-based index)
    or from ``label_file``, a one-column file with one label per data row.
    """
    if (label_column is None) == (label_file is None):
        raise InputError("give exactly one of label_column or label_file")
    rows = _read_rows(path, delimiter)
    header = None
    if has_header:
        if not rows:
            raise InputError(f"{path} is empty")
        header, rows = [h.strip() for h in rows[0]], rows[1:]
    if not rows:
        raise InputError(f"{path} has no data rows")
    width = len(header) if header is not None else len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"ragged row {i + 1}: {len(row)} fields, expected {width}")

    if label_column is not None:
        if isinstance(label_column, str) and header is not None and label_column in header:
            col = header.index(label_column)
        elif isinstance(label_column, int) or str(label_column).lstrip("-").isdigit():
            col = int(label_column)
            if not -width <= col < width:
                raise InputError(f"label column index {col} out of range")
            col %= width
        else:
            raise InputError(f"unknown label column {label_column!r}")
        labels = tuple(row[col].strip() for row in rows)
    else:
        lab_rows = _read_rows(label_file, delimiter)
        labels = tuple(r[0].strip() for r in lab_rows)
        if len(labels) == len(rows) + 1 and has_header:
            labels = labels[1:]
        if len(labels) != len(rows):
            raise InputError(f"label file has {len(labels)} labels for {len(rows)} rows")
        col = None

    keep = [j for j in range(width) if j != col]
    X = np.empty((len(rows), len(keep)))
    for i, row in enumerate(rows):
        for jj, j in enumerate(keep):
            cell = row[j].strip()
            name = header[j] if header is not None else str(j)
            if cell.lower() in _MISSING:
                raise InputError(f"missing value at row {i + 1}, column {name!r}")
            try:
                X[i, jj] = float(cell)
            except ValueError:
                raise InputError(f"non-numeric value {cell!r} at row {i + 1}, column {name!r}")
            if not math.isfinite(X[i, jj]):
                raise InputError(f"missing value at row {i + 1}, column {name!r}")
    names = tuple(header[j] for j in keep) if header is not None else None
    table = DatasetTable(X=X, labels=labels, variable_names=names)
    if len(table.groups) < 2:
        raise InputError(f"need at least 2 groups, found {len(table.groups)}")
    return table


def write_csv(table: DatasetTable, path, label_column: str = "label", delimiter: str = ","):
    """Write ``table`` in the format :func:`load_csv` reads back exactly."""
    names = table.variable_names or tuple(f"v{j}" for j in range(table.X.shape[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow([*names, label_column])
        for row, lab in zip(table.X, table.labels):
            w.writerow([repr(float(v)) for v in row] + [lab])


@dataclass(frozen=True)
class PairwiseResult:
    pair: str
    test: str
    statistic: float
    log_p: float
    note: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def ok(self) -> bool:
        return math.isfinite(self.statistic)


def _pair_results(table, g1, g2, tests, k, alpha, pb_cfg):
    x1, x2 = table.group(g1), table.group(g2)
    summary = pooled_summary(x1, x2)
    pair = f"{g1}-{g2}"
    run = [t for t in tests if not (t == "BF2" and summary.n < 5)]
    res = evaluate(x1, x2, run, k, pb_cfg, summary=summary, collect_errors=True)
    out = []
    for t in tests:
        r = res.get(t)
        if r is None:
            out.append(PairwiseResult(pair, t, math.nan, math.nan, "skipped: n < 5"))
        elif isinstance(r, Exception):
            out.append(PairwiseResult(pair, t, math.nan, math.nan,
                                      f"error: {type(r).__name__}: {r}"))
        else:
            note = "reject" if r.p_value <= alpha else ""
            out.append(PairwiseResult(pair, t, r.statistic, r.log_p, note))
    return out


def run_pairwise(table: DatasetTable, tests, k: float = DEFAULT_K, alpha: float = 0.05,
                 pb_cfg: PbConfig | None = None, threads: int = 1) -> list[PairwiseResult]:
    """Evaluate ``tests`` on every unordered group pair, in group order.

    One pooled summary is shared by all tests of a pair.  A test that fails
    on a pair yields a row with NaN values and the error message as note;
    rejections at level ``alpha`` are noted as ``reject``.  ``threads`` only
    changes speed, never the output order.
    """
    tests = parse_tests(tests)
    sizes = table.group_sizes()
    small = [g for g, c in sizes.items() if c < 2]
    if small:
        raise InputError(f"groups with fewer than 2 observations: {small}")
    pairs = list(itertools.combinations(table.groups, 2))

    def job(pair):
        return _pair_results(table, *pair, tests, k, alpha, pb_cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(job, pairs))
    else:
        chunks = [job(pr) for pr in pairs]
    return [r for chunk in chunks for r in chunk]
