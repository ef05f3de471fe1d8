"""Per-class (gender, age group) probability tables and argmax queries."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .cpd import format_prob
from .errors import DataError, NumericError, ParameterError

AGE_GROUPS = (
    "0 - 9 Years", "10 - 19 Years", "20 - 29 Years", "30 - 39 Years", "40 - 49 Years",
    "50 - 59 Years", "60 - 69 Years", "70 - 79 Years", "80+ Years",
)
GENDERS = ("Female", "Male")
# Female 0-9, ..., Female 80+, Male 0-9, ..., Male 80+
CATEGORIES = tuple((g, a) for g in GENDERS for a in AGE_GROUPS)

ROW_SUM_TOL = 1e-6


def category_label(cat) -> str:
    return " ".join(cat)


@dataclass(frozen=True, eq=False)
class DemographicTable:
    """``probs[c, g]`` = P(category g | class c)."""

    categories: tuple[tuple[str, ...], ...]
    probs: np.ndarray
    empty_classes: tuple[int, ...] = ()
    row_tolerance: float = field(default=ROW_SUM_TOL, compare=False)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != len(self.categories):
            raise DataError(f"probability matrix shape {probs.shape} does not match {len(self.categories)} categories")
        if not np.isfinite(probs).all() or (probs < 0).any() or (probs > 1).any():
            raise NumericError("demographic probabilities must lie in [0, 1]")
        if probs.size and np.abs(probs.sum(axis=1) - 1).max() > self.row_tolerance:
            raise NumericError("each class row must sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "categories", tuple(tuple(c) for c in self.categories))

    def __eq__(self, other):
        if not isinstance(other, DemographicTable):
            return NotImplemented
        return ((self.categories, self.empty_classes) == (other.categories, other.empty_classes)
                and np.array_equal(self.probs, other.probs))

    __hash__ = None

    @property
    def classes(self) -> int:
        return self.probs.shape[0]

    def _row(self, cls: int) -> np.ndarray:
        if not 0 <= cls < self.classes:
            raise ParameterError(f"class {cls} out of range [0, {self.classes})")
        return self.probs[cls]

    def to_csv(self) -> str:
        """Categories as rows, classes as columns, two decimals."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", *(f"C{c}" for c in range(self.classes))])
        for g, cat in enumerate(self.categories):
            w.writerow([category_label(cat), *(format_prob(p) for p in self.probs[:, g])])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "categories": [list(c) for c in self.categories],
            "probs": self.probs.tolist(),
            "empty_classes": list(self.empty_classes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "DemographicTable":
        return cls(tuple(tuple(c) for c in obj["categories"]), np.asarray(obj["probs"]), tuple(obj.get("empty_classes", ())))


def fit_demographic_table(labels, demographics, k: int, categories=CATEGORIES) -> DemographicTable:
    """Relative frequency of each demographic category within each class.

    ``demographics`` holds one category tuple per row (e.g. ``("Female",
    "20 - 29 Years")``). Classes with no rows get a uniform row and are listed
    in ``empty_classes``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    demographics = [tuple(d) for d in demographics]
    if labels.shape[0] != len(demographics):
        raise DataError(f"{labels.shape[0]} labels but {len(demographics)} demographic records")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise DataError(f"labels must lie in [0, {k})")
    index = {tuple(c): i for i, c in enumerate(categories)}
    try:
        cat = np.array([index[d] for d in demographics], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"unknown demographic category {exc.args[0]!r}") from None
    counts = np.zeros((k, len(categories)))
    np.add.at(counts, (labels, cat), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    probs = np.divide(counts, totals, out=np.full_like(counts, 1.0 / len(categories)), where=totals > 0)
    empty = tuple(int(c) for c in np.flatnonzero(totals[:, 0] == 0))
    return DemographicTable(tuple(categories), probs, empty)


def argmax_demographic(table: DemographicTable, cls: int) -> tuple[tuple[str, ...], float]:
    """Most probable category for a class; ties go to the lowest category index."""
    row = table._row(cls)
    g = int(np.argmax(row))
    return table.categories[g], float(row[g])


def zero_support_categories(table: DemographicTable, cls: int) -> frozenset[tuple[str, ...]]:
    row = table._row(cls)
    return frozenset(table.categories[g] for g in np.flatnonzero(row == 0.0))


def load_reference_demographics() -> DemographicTable:
    """The reference 27-class table, stored with two decimals.

    Its two-decimal columns sum to between 0.98 and 1.01 after rounding, so the row
    check is relaxed to that precision.
    """
    text = resources.files("cpdforge").joinpath("fixtures").joinpath("reference_demographics.csv").read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    labels = [r[0] for r in rows[1:]]
    values = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    lookup = {category_label(c): c for c in CATEGORIES}
    cats = tuple(lookup[l] for l in labels)
    return DemographicTable(cats, values.T, row_tolerance=0.021)
