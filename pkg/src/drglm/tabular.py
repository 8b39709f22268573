"""Column-oriented, immutable tables of numeric and categorical data."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"


def _freeze(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Column:
    """A single typed column.

    Numeric columns hold finite float64 values. Categorical columns hold
    strings and carry the sorted list of distinct levels; the first level is
    the reference level for dummy coding.
    """

    kind: str
    values: np.ndarray
    levels: tuple = field(default=())

    @classmethod
    def numeric(cls, values) -> "Column":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise DataError("numeric column must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise DataError("numeric column contains NaN or infinite values")
        return cls(NUMERIC, _freeze(arr))

    @classmethod
    def categorical(cls, values, levels=None) -> "Column":
        arr = np.asarray([str(v) for v in values], dtype=object)
        observed = sorted(set(arr.tolist()))
        if levels is None:
            levels = observed
        else:
            levels = sorted(levels)
            missing = set(observed) - set(levels)
            if missing:
                raise DataError(f"values {sorted(missing)} not among declared levels")
        return cls(CATEGORICAL, _freeze(arr), tuple(levels))

    def __len__(self):
        return len(self.values)

    @property
    def is_numeric(self):
        return self.kind == NUMERIC

    def take(self, idx) -> "Column":
        # levels are kept so designs built on the parent stay applicable
        vals = self.values[idx]
        if self.is_numeric:
            return Column(NUMERIC, _freeze(vals))
        return Column(CATEGORICAL, _freeze(vals), self.levels)


class Dataset(Mapping):
    """An immutable ordered mapping of column name to :class:`Column`.

    Every column has exactly ``n_rows`` entries. Row subsets keep the
    categorical level sets of the parent, so a design matrix built on the
    full data can be rebuilt on any subset or resample.
    """

    def __init__(self, columns: Mapping[str, Column]):
        cols = dict(columns)
        if not cols:
            raise DataError("dataset has no columns")
        lengths = {len(c) for c in cols.values()}
        if len(lengths) != 1:
            raise DataError(f"columns have unequal lengths {sorted(lengths)}")
        for name in cols:
            if not isinstance(name, str) or not name:
                raise DataError("column names must be nonempty strings")
        self._columns = cols
        self.n_rows = lengths.pop()

    @classmethod
    def from_dict(cls, data: Mapping, categorical=()) -> "Dataset":
        """Build a dataset from arrays; string arrays become categorical."""
        cols = {}
        for name, values in data.items():
            if isinstance(values, Column):
                cols[name] = values
                continue
            arr = np.asarray(values)
            if name in categorical or arr.dtype.kind in "OUS":
                cols[name] = Column.categorical(arr)
            else:
                cols[name] = Column.numeric(arr)
        return cls(cols)

    def __getitem__(self, name) -> Column:
        try:
            return self._columns[name]
        except KeyError:
            raise KeyError(f"no column named {name!r}") from None

    def __iter__(self):
        return iter(self._columns)

    def __len__(self):
        return len(self._columns)

    def __repr__(self):
        kinds = ", ".join(f"{k}:{c.kind[:3]}" for k, c in self._columns.items())
        return f"Dataset(n_rows={self.n_rows}, columns=[{kinds}])"

    @property
    def names(self):
        return list(self._columns)

    def values(self, name) -> np.ndarray:
        return self[name].values

    def with_column(self, name, column: Column) -> "Dataset":
        cols = dict(self._columns)
        cols[name] = column
        return Dataset(cols)

    def take(self, idx) -> "Dataset":
        """Rows at integer positions ``idx`` (repeats allowed)."""
        idx = np.asarray(idx)
        return Dataset({k: c.take(idx) for k, c in self._columns.items()})

    def subset(self, mask) -> "Dataset":
        return self.take(np.flatnonzero(np.asarray(mask, dtype=bool)))

    def schema(self):
        return {k: (c.kind, c.levels) for k, c in self._columns.items()}


def _parse_float(text):
    try:
        val = float(text)
    except ValueError:
        return None
    return val if math.isfinite(val) else None


def read_csv(path, schema_hints: Mapping[str, str] | None = None) -> Dataset:
    """Read a headed, RFC-4180 CSV file into a :class:`Dataset`.

    A column is numeric when every cell parses as a finite real, otherwise
    categorical. ``schema_hints`` maps column names to ``"numeric"`` or
    ``"categorical"`` and overrides inference. Missing cells are rejected.
    """
    hints = dict(schema_hints or {})
    with open(Path(path), newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise DataError(f"{path}: header names must be unique and nonempty")
    for name, kind in hints.items():
        if name not in header:
            raise DataError(f"{path}: hinted column {name!r} not in header")
        if kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"{path}: unknown column kind {kind!r} for {name!r}")
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
    if not body:
        raise DataError(f"{path}: no data rows")

    cols = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in body]
        for i, cell in enumerate(cells):
            if cell.strip() == "" or cell in ("NA", "NaN"):
                raise DataError(f"{path}: missing value in column {name!r}, row {i + 1}")
        kind = hints.get(name)
        parsed = [_parse_float(c) for c in cells]
        if kind == NUMERIC:
            for i, v in enumerate(parsed):
                if v is None:
                    raise DataError(
                        f"{path}: column {name!r}, row {i + 1}: {cells[i]!r} is not a finite number"
                    )
            cols[name] = Column.numeric(parsed)
        elif kind == CATEGORICAL or any(v is None for v in parsed):
            cols[name] = Column.categorical(cells)
        else:
            cols[name] = Column.numeric(parsed)
    return Dataset(cols)


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` with numeric values at round-trip precision."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.names)
        cols = [ds[k] for k in ds.names]
        for i in range(ds.n_rows):
            writer.writerow(
                [repr(float(c.values[i])) if c.is_numeric else c.values[i] for c in cols]
            )


def override_exposure(ds: Dataset, name: str, value: int) -> Dataset:
    """Copy of ``ds`` with the binary column ``name`` set to ``value`` everywhere."""
    if value not in (0, 1):
        raise DataError(f"exposure value must be 0 or 1, got {value!r}")
    col = ds[name]
    if not col.is_numeric or not np.all(np.isin(col.values, (0.0, 1.0))):
        raise DataError(f"column {name!r} is not a numeric 0/1 column")
    return ds.with_column(name, Column.numeric(np.full(ds.n_rows, float(value))))
