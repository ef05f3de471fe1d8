"""Kmeans++ / Lloyd clustering and Dunn-index selection of K."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .data import FeatureMatrix
from .errors import DataError, EmptyInputError, ParameterError, SizeError


def _as_array(data) -> np.ndarray:
    arr = np.asarray(data.data if isinstance(data, FeatureMatrix) else data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise EmptyInputError("clustering needs a non-empty 2-D data matrix")
    return arr


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # accumulate one coordinate at a time so every distance is summed in the
    # same left-to-right order, independent of array shapes or SIMD paths
    out = np.zeros((x.shape[0], centroids.shape[0]))
    for d in range(x.shape[1]):
        diff = x[:, d, None] - centroids[None, :, d]
        out += diff * diff
    return out


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    sse: float
    iterations: int
    converged: bool
    sse_history: tuple[float, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {"k": self.k, "centroids": self.centroids.tolist(), "sse": self.sse, "iterations": self.iterations}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def assignments_csv(self) -> str:
        return "cluster\n" + "".join(f"{a}\n" for a in self.assignments.tolist())

    def predict(self, data) -> np.ndarray:
        return np.argmin(_sq_dists(_as_array(data), self.centroids), axis=1)


def sse_of(data, centroids, assignments) -> float:
    x = _as_array(data)
    c = np.asarray(centroids, dtype=np.float64)[np.asarray(assignments)]
    per_row = np.zeros(x.shape[0])
    for d in range(x.shape[1]):
        diff = x[:, d] - c[:, d]
        per_row += diff * diff
    return float(per_row.sum())


def kmeanspp_init(data, k: int, seed: int = 0) -> np.ndarray:
    """D^2-weighted seeding.

    The first centroid is a uniformly chosen row; each later one is a row
    drawn with probability proportional to its squared distance to the
    nearest centroid chosen so far. If every remaining distance is zero the
    draw falls back to uniform over rows.
    """
    x = _as_array(data)
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if k > x.shape[0]:
        raise SizeError(f"k={k} exceeds the number of rows ({x.shape[0]})")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(x.shape[0]))]
    d2 = _sq_dists(x, x[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(x.shape[0], p=d2 / total))
        else:
            idx = int(rng.integers(x.shape[0]))
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(x, x[idx:idx + 1])[:, 0])
    return x[chosen].copy()


def random_init(data, k: int, seed: int = 0) -> np.ndarray:
    """k distinct rows chosen uniformly; the baseline seeding."""
    x = _as_array(data)
    if not 1 <= k <= x.shape[0]:
        raise SizeError(f"k={k} invalid for {x.shape[0]} rows")
    rng = np.random.default_rng(seed)
    return x[rng.choice(x.shape[0], size=k, replace=False)].copy()


def _repair_empty(x, centroids, labels, d2):
    k = centroids.shape[0]
    for j in range(k):
        if np.any(labels == j):
            continue
        own = d2[np.arange(x.shape[0]), labels]
        far = int(np.argmax(own))
        centroids[j] = x[far]
        labels[far] = j
        d2[far, j] = 0.0


def lloyd(data, centroids, max_iter: int = 300, tol: float = 1e-10) -> ClusterModel:
    """Alternate nearest-centroid assignment and mean updates.

    Stops when assignments no longer change or no centroid moves more than
    ``tol``. An empty cluster is re-seeded at the point farthest from its
    current centroid.
    """
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1")
    x = _as_array(data)
    c = np.array(centroids, dtype=np.float64, copy=True)
    if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] != x.shape[1]:
        raise ParameterError(f"centroids of shape {c.shape} do not match data of shape {x.shape}")
    k = c.shape[0]
    d2 = _sq_dists(x, c)
    labels = np.argmin(d2, axis=1)
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        _repair_empty(x, c, labels, d2)
        new_c = c.copy()
        for j in range(k):
            members = x[labels == j]
            if len(members):
                new_c[j] = members.mean(axis=0)
        shift = float(np.max(np.abs(new_c - c)))
        c = new_c
        d2 = _sq_dists(x, c)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(x.shape[0]), new_labels].sum()))
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable or shift <= tol:
            converged = True
            break
    labels.setflags(write=False)
    c.setflags(write=False)
    return ClusterModel(k, c, labels, sse_of(x, c, labels), it, converged, tuple(history))


def kmeans(data, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-10) -> ClusterModel:
    return lloyd(data, kmeanspp_init(data, k, seed), max_iter=max_iter, tol=tol)


def _unique_members(x, labels):
    # Dunn only depends on the distinct (cluster, point) pairs
    keyed = np.unique(np.column_stack([labels.astype(np.float64), x]), axis=0)
    return keyed[:, 1:], keyed[:, 0].astype(np.int64)


def dunn_index(data, model: ClusterModel | np.ndarray, k: int | None = None) -> float:
    """Minimum single-linkage distance between clusters over maximum cluster diameter.

    Returns ``inf`` when every cluster has zero diameter.
    """
    x = _as_array(data)
    labels = np.asarray(model.assignments if isinstance(model, ClusterModel) else model)
    if k is None:
        k = model.k if isinstance(model, ClusterModel) else int(labels.max()) + 1
    if labels.shape[0] != x.shape[0]:
        raise DataError("one assignment per row is required")
    if k < 2:
        raise ParameterError("Dunn index needs at least 2 clusters")
    counts = np.bincount(labels, minlength=k)
    if (counts == 0).any():
        raise DataError(f"cluster {int(np.flatnonzero(counts == 0)[0])} is empty")
    pts, lab = _unique_members(x, labels)
    groups = [pts[lab == j] for j in range(k)]
    max_diam_sq = 0.0
    for g in groups:
        if len(g) > 1:
            max_diam_sq = max(max_diam_sq, float(_sq_dists(g, g).max()))
    min_sep_sq = np.inf
    for a in range(k):
        for b in range(a + 1, k):
            min_sep_sq = min(min_sep_sq, float(_sq_dists(groups[a], groups[b]).min()))
    if max_diam_sq == 0.0:
        return float("inf")
    return float(np.sqrt(min_sep_sq) / np.sqrt(max_diam_sq))


@dataclass(frozen=True)
class KSelection:
    k_min: int
    k_max: int
    scores: tuple[float, ...]
    chosen_k: int
    models: tuple[ClusterModel, ...] = field(default=(), compare=False, repr=False)

    def model_for(self, k: int) -> ClusterModel:
        return self.models[k - self.k_min]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "dunn", "sse"])
        for k, s, m in zip(range(self.k_min, self.k_max + 1), self.scores, self.models):
            w.writerow([k, repr(s), repr(m.sse)])
        return buf.getvalue()


def derived_seed(seed: int, k: int, run: int = 0) -> int:
    return int(np.random.SeedSequence([seed, k, run]).generate_state(1)[0])


def select_k(data, k_min: int, k_max: int, seed: int = 0, n_init: int = 3, max_iter: int = 300) -> KSelection:
    """Scan K, cluster each with Kmeans++ and keep the K of largest Dunn index.

    Each K keeps the lowest-SSE of ``n_init`` seeded runs; a single Kmeans++
    start can settle in a merged-and-split local optimum at the true K, which
    then scores poorly. Ties in the Dunn score go to the smaller K.
    """
    x = _as_array(data)
    if not 2 <= k_min <= k_max <= x.shape[0]:
        raise ParameterError(f"need 2 <= k_min <= k_max <= n_rows, got {k_min}, {k_max}, {x.shape[0]}")
    if n_init < 1:
        raise ParameterError("n_init must be >= 1")
    scores, models = [], []
    for k in range(k_min, k_max + 1):
        best = None
        for run in range(n_init):
            m = kmeans(x, k, seed=derived_seed(seed, k, run), max_iter=max_iter)
            if best is None or m.sse < best.sse:
                best = m
        models.append(best)
        try:
            scores.append(dunn_index(x, best))
        except DataError:
            scores.append(0.0)
    chosen = k_min + int(np.argmax(scores))
    return KSelection(k_min, k_max, tuple(scores), chosen, tuple(models))
