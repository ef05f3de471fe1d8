"""Categorical tables: CSV ingestion, encoding and train/val/test splits."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateVariableError,
    EmptyInputError,
    FormatError,
    ParameterError,
    TooFewRowsError,
    VariableMismatchError,
)

MISSING_STATE = "missing"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CategoricalTable:
    """Records over named categorical variables with explicit state spaces.

    ``rows`` is an ``(n_rows, n_vars)`` integer array of state indices; the
    i-th column indexes into ``states[i]``.
    """

    variables: tuple[str, ...]
    states: tuple[tuple[str, ...], ...]
    rows: np.ndarray

    def __post_init__(self):
        variables = tuple(str(v) for v in self.variables)
        states = tuple(tuple(str(s) for s in st) for st in self.states)
        if len(set(variables)) != len(variables):
            raise FormatError(f"duplicate variable names in {variables}")
        if len(states) != len(variables):
            raise FormatError("one state list per variable is required")
        for name, st in zip(variables, states):
            if len(st) < 2:
                raise DegenerateVariableError(f"variable {name!r} has fewer than 2 states")
            if len(set(st)) != len(st):
                raise FormatError(f"duplicate state labels for {name!r}")
        rows = np.array(self.rows, dtype=np.int64, copy=True)
        if rows.size == 0:
            rows = rows.reshape(0, len(variables))
        if rows.ndim != 2 or rows.shape[1] != len(variables):
            raise FormatError(f"rows must have shape (n, {len(variables)}), got {rows.shape}")
        cards = np.array([len(s) for s in states], dtype=np.int64)
        if rows.size and (rows.min() < 0 or (rows >= cards).any()):
            bad = np.argwhere((rows < 0) | (rows >= cards))[0]
            raise FormatError(f"state index out of range at row {bad[0]}, column {variables[bad[1]]!r}")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "rows", _frozen(rows))

    def __eq__(self, other):
        if not isinstance(other, CategoricalTable):
            return NotImplemented
        return (self.variables, self.states) == (other.variables, other.states) and np.array_equal(self.rows, other.rows)

    __hash__ = None

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.states)

    def index(self, variable: str | int) -> int:
        if isinstance(variable, (int, np.integer)):
            if not 0 <= variable < self.n_vars:
                raise VariableMismatchError(f"variable index {variable} out of range")
            return int(variable)
        try:
            return self.variables.index(variable)
        except ValueError:
            raise VariableMismatchError(f"unknown variable {variable!r}") from None

    def column(self, variable: str | int) -> np.ndarray:
        return self.rows[:, self.index(variable)]

    def labels(self, variable: str | int) -> list[str]:
        j = self.index(variable)
        st = self.states[j]
        return [st[c] for c in self.rows[:, j]]

    def take(self, indices: Sequence[int] | np.ndarray) -> "CategoricalTable":
        return CategoricalTable(self.variables, self.states, self.rows[np.asarray(indices, dtype=np.int64)])

    def select(self, variables: Iterable[str | int]) -> "CategoricalTable":
        idx = [self.index(v) for v in variables]
        return CategoricalTable(
            tuple(self.variables[i] for i in idx),
            tuple(self.states[i] for i in idx),
            self.rows[:, idx],
        )

    def metadata(self) -> dict:
        return {"variables": list(self.variables), "states": [list(s) for s in self.states], "n_rows": self.n_rows}

    def to_json(self) -> str:
        return json.dumps(self.metadata(), indent=2)

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.variables)
        lookup = [np.array(s, dtype=object) for s in self.states]
        for row in self.rows:
            writer.writerow([lookup[j][c] for j, c in enumerate(row)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_labels(
        cls,
        variables: Sequence[str],
        records: Sequence[Sequence[str]],
        states: Sequence[Sequence[str]] | None = None,
    ) -> "CategoricalTable":
        """Build a table from string records; states default to sorted distinct labels."""
        records = [list(r) for r in records]
        if states is None:
            states = [sorted({r[j] for r in records}) for j in range(len(variables))]
        index = [{s: i for i, s in enumerate(st)} for st in states]
        try:
            rows = [[index[j][val] for j, val in enumerate(r)] for r in records]
        except KeyError as exc:
            raise FormatError(f"label {exc.args[0]!r} not in declared states") from None
        return cls(tuple(variables), tuple(tuple(s) for s in states), np.array(rows, dtype=np.int64).reshape(len(rows), len(variables)))


def load_csv(
    path: str | os.PathLike,
    header_row: bool = True,
    missing_values: Sequence[str] = ("",),
    drop_missing: bool = False,
    drop_degenerate: bool = False,
) -> CategoricalTable:
    """Read a categorical CSV file.

    State spaces are the sorted distinct labels of each column. Cells equal
    to one of ``missing_values`` become the explicit state ``"missing"``
    unless ``drop_missing`` is set, in which case those rows are removed.
    Columns with fewer than two distinct values raise
    :class:`DegenerateVariableError` unless ``drop_degenerate`` is set.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        raw = [r for r in csv.reader(fh)]
    raw = [r for r in raw if r != []]
    if not raw:
        raise EmptyInputError(f"{path}: file is empty")
    if header_row:
        header, body = raw[0], raw[1:]
        if len(set(header)) != len(header):
            raise FormatError(f"{path}: duplicate header names")
    else:
        header, body = [f"X{j}" for j in range(len(raw[0]))], raw
    if not body:
        raise EmptyInputError(f"{path}: no data rows")
    width = len(header)
    for i, r in enumerate(body):
        if len(r) != width:
            line = i + 2 if header_row else i + 1
            raise FormatError(f"{path}: row {line} has {len(r)} fields, expected {width}")

    missing = set(missing_values)
    if drop_missing:
        body = [r for r in body if not missing.intersection(r)]
        if not body:
            raise EmptyInputError(f"{path}: every row has a missing value")
    else:
        body = [[MISSING_STATE if c in missing else c for c in r] for r in body]

    keep, states = [], []
    for j, name in enumerate(header):
        distinct = sorted({r[j] for r in body})
        if len(distinct) < 2:
            if drop_degenerate:
                continue
            raise DegenerateVariableError(f"{path}: column {name!r} has fewer than 2 distinct values")
        keep.append(j)
        states.append(distinct)
    if not keep:
        raise EmptyInputError(f"{path}: no non-degenerate columns")
    return CategoricalTable.from_labels(
        [header[j] for j in keep], [[r[j] for j in keep] for r in body], states
    )


@dataclass(frozen=True)
class FeatureMatrix:
    """Real-valued encoding of a :class:`CategoricalTable`.

    ``column_map[c]`` is ``(variable, state)`` for one-hot columns and
    ``(variable, None)`` for integer columns.
    """

    data: np.ndarray
    column_map: tuple[tuple[str, str | None], ...]
    encoding: str
    states: tuple[tuple[str, ...], ...] = field(default=())
    variables: tuple[str, ...] = field(default=())

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_dims(self) -> int:
        return self.data.shape[1]


ENCODINGS = ("one_hot", "integer")


def encode(table: CategoricalTable, mode: str = "one_hot") -> FeatureMatrix:
    if mode not in ENCODINGS:
        raise ParameterError(f"encoding must be one of {ENCODINGS}, got {mode!r}")
    if table.n_rows == 0:
        raise EmptyInputError("cannot encode an empty table")
    if mode == "integer":
        data = table.rows.astype(np.float64)
        cmap = tuple((v, None) for v in table.variables)
    else:
        cards = table.cardinalities
        offsets = np.concatenate([[0], np.cumsum(cards)[:-1]])
        data = np.zeros((table.n_rows, sum(cards)))
        data[np.arange(table.n_rows)[:, None], table.rows + offsets] = 1.0
        cmap = tuple((v, s) for v, st in zip(table.variables, table.states) for s in st)
    return FeatureMatrix(_frozen(data), cmap, mode, table.states, table.variables)


def decode(features: FeatureMatrix) -> CategoricalTable:
    """Invert :func:`encode` using the stored column map."""
    if features.encoding == "integer":
        rows = np.rint(features.data).astype(np.int64)
    else:
        blocks, start = [], 0
        for st in features.states:
            blocks.append(np.argmax(features.data[:, start:start + len(st)], axis=1))
            start += len(st)
        rows = np.stack(blocks, axis=1)
    return CategoricalTable(features.variables, features.states, rows)


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        r = tuple(float(x) for x in self.ratios)
        if len(r) != 3 or any(x <= 0 for x in r):
            raise ParameterError(f"split ratios must be three positive numbers, got {self.ratios}")
        if abs(sum(r) - 1.0) > 1e-12:
            raise ParameterError(f"split ratios must sum to 1, got {sum(r)!r}")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")
        object.__setattr__(self, "ratios", r)


def split_indices(n_rows: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if n_rows < 10:
        raise TooFewRowsError(f"need at least 10 rows to split, got {n_rows}")
    # guard against 0.1 * 30 -> 3.0000000000000004 style float noise on either side
    n_val = math.floor(spec.ratios[1] * n_rows + 1e-9)
    n_test = math.floor(spec.ratios[2] * n_rows + 1e-9)
    n_train = n_rows - n_val - n_test
    perm = np.random.default_rng(spec.seed).permutation(n_rows)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def split(table: CategoricalTable, spec: SplitSpec = SplitSpec()):
    """Seeded shuffle into (train, val, test); the flooring remainder goes to train."""
    return tuple(table.take(ix) for ix in split_indices(table.n_rows, spec))
