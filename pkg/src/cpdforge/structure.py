"""Score-based DAG search: BIC / BDeu family scores, exhaustive and hill-climb search."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.special import gammaln

from ._counting import family_counts, ordered_map
from .dag import Dag
from .data import CategoricalTable
from .errors import EmptyInputError, ParameterError, SizeError, VariableMismatchError

SCORES = ("bic", "bdeu")
EXHAUSTIVE_MAX_VARS = 5

# relative slack used when comparing scores; equivalent DAGs differ only by rounding
SCORE_RTOL = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    score: str = "bic"
    ess: float = 1.0
    max_parents: int | None = 5
    max_iterations: int = 1000
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.score not in SCORES:
            raise ParameterError(f"score must be one of {SCORES}, got {self.score!r}")
        if self.score == "bdeu" and not self.ess > 0:
            raise ParameterError("ess must be positive for bdeu")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if self.restarts < 1:
            raise ParameterError("restarts must be >= 1")
        if self.max_parents is not None and self.max_parents < 0:
            raise ParameterError("max_parents must be >= 0 or None")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")


@dataclass(frozen=True)
class ScoredDag:
    dag: Dag
    score: float
    iterations_used: int
    trace: tuple[float, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {**self.dag.to_dict(), "score": self.score, "iterations": self.iterations_used}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _tol(score: float) -> float:
    return SCORE_RTOL * max(1.0, abs(score))


def _bic(counts: np.ndarray, n_rows: int) -> float:
    q, r = counts.shape
    totals = counts.sum(axis=1, keepdims=True)
    nz = counts > 0
    loglik = float(np.sum(counts[nz] * np.log(counts[nz] / np.broadcast_to(totals, counts.shape)[nz])))
    return loglik - 0.5 * math.log(n_rows) * (r - 1) * q


def _bdeu(counts: np.ndarray, ess: float) -> float:
    q, r = counts.shape
    a_j = ess / q
    a_jk = ess / (q * r)
    totals = counts.sum(axis=1)
    return float(
        np.sum(gammaln(a_j) - gammaln(a_j + totals))
        + np.sum(gammaln(a_jk + counts) - gammaln(a_jk))
    )


class FamilyScorer:
    """Caches decomposable family scores for one table and score config."""

    def __init__(self, table: CategoricalTable, config: SearchConfig):
        if table.n_rows == 0:
            raise EmptyInputError("cannot score an empty table")
        self.table = table
        self.config = config
        self.cards = table.cardinalities
        self._cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def _compute(self, key) -> float:
        var, parents = key
        counts = family_counts(self.table.rows, self.cards, var, parents)
        if self.config.score == "bic":
            return _bic(counts, self.table.n_rows)
        return _bdeu(counts, self.config.ess)

    def __call__(self, var: int, parents) -> float:
        key = (var, tuple(sorted(parents)))
        try:
            return self._cache[key]
        except KeyError:
            val = self._cache[key] = self._compute(key)
            return val

    def prefetch(self, keys) -> None:
        missing = sorted({(v, tuple(sorted(p))) for v, p in keys} - self._cache.keys())
        for key, val in zip(missing, ordered_map(self._compute, missing)):
            self._cache[key] = val

    def total(self, parent_sets) -> float:
        return sum(self(v, p) for v, p in enumerate(parent_sets))


def local_score(table: CategoricalTable, var, parents=(), config: SearchConfig = SearchConfig()) -> float:
    """Decomposable score of one variable given a parent set.

    BIC is ``sum N(v, pc) ln(N(v, pc) / N(pc)) - ln(n)/2 * (r - 1) * q`` with
    ``0 ln 0 = 0``; BDeu uses the symmetric Dirichlet with ``ess`` spread over
    all ``q * r`` cells.
    """
    v = table.index(var)
    ps = [table.index(p) for p in parents]
    if v in ps:
        raise ParameterError(f"variable {table.variables[v]!r} cannot be its own parent")
    if len(set(ps)) != len(ps):
        raise ParameterError("duplicate parents")
    return FamilyScorer(table, config)(v, ps)


def _check_match(table: CategoricalTable, dag: Dag) -> None:
    if tuple(dag.node_names) != tuple(table.variables):
        raise VariableMismatchError(
            f"DAG nodes {dag.node_names} do not match table variables {table.variables}"
        )


def total_score(table: CategoricalTable, dag: Dag, config: SearchConfig = SearchConfig()) -> float:
    _check_match(table, dag)
    scorer = FamilyScorer(table, config)
    return scorer.total([dag.parents(v) for v in range(dag.n_nodes)])


@lru_cache(maxsize=None)
def enumerate_dags(n: int) -> tuple[tuple[int, ...], ...]:
    """All labelled DAGs on ``n`` nodes as tuples of parent bitmasks.

    Built node by node: every DAG on k+1 nodes is a unique DAG on the first
    k nodes plus a choice, for each earlier node, of no edge / edge into the
    new node / edge out of it that does not close a cycle.
    """
    dags: list[tuple[int, ...]] = [()]
    for k in range(n):
        grown = []
        for pm in dags:
            # reach[i]: bitmask of nodes reachable from i
            reach = [0] * k
            children = [[c for c in range(k) if pm[c] >> i & 1] for i in range(k)]
            for i in _reverse_topo(pm, k):
                acc = 0
                for c in children[i]:
                    acc |= (1 << c) | reach[c]
                reach[i] = acc
            for choice in product((0, 1, 2), repeat=k):
                into = sum(1 << i for i, c in enumerate(choice) if c == 1)
                out = [i for i, c in enumerate(choice) if c == 2]
                if any(reach[c] & into for c in out):
                    continue
                new = list(pm)
                for c in out:
                    new[c] |= 1 << k
                new.append(into)
                grown.append(tuple(new))
        dags = grown
    return tuple(dags)


def _reverse_topo(pm, k):
    done, order = 0, []
    while len(order) < k:
        for i in range(k):
            if not done >> i & 1 and (pm[i] & ~done) == 0:
                done |= 1 << i
                order.append(i)
    return reversed(order)


def _mask_nodes(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def exhaustive_search(table: CategoricalTable, config: SearchConfig = SearchConfig()) -> ScoredDag:
    """Global score maximiser over every DAG (at most five variables).

    Ties within rounding are broken by fewest edges, then by the
    lexicographically smallest sorted edge list.
    """
    n = table.n_vars
    if n > EXHAUSTIVE_MAX_VARS:
        raise SizeError(f"exhaustive search supports at most {EXHAUSTIVE_MAX_VARS} variables, got {n}")
    scorer = FamilyScorer(table, config)
    limit = n if config.max_parents is None else config.max_parents
    local = np.full((n, 1 << n), -np.inf)
    for v in range(n):
        for mask in range(1 << n):
            if mask >> v & 1 or bin(mask).count("1") > limit:
                continue
            local[v, mask] = scorer(v, _mask_nodes(mask))
    dags = np.array(enumerate_dags(n), dtype=np.int64).reshape(-1, n)
    totals = local[np.arange(n), dags].sum(axis=1) if n else np.zeros(len(dags))
    best = totals.max()
    ties = np.flatnonzero(totals >= best - _tol(best))

    def key(i):
        edges = sorted((p, c) for c in range(n) for p in _mask_nodes(int(dags[i, c])))
        return (len(edges), edges)

    winner = min(ties, key=key)
    edges = key(winner)[1]
    return ScoredDag(Dag(table.variables, frozenset(edges)), float(totals[winner]), len(dags))


_ADD, _DELETE, _REVERSE = 0, 1, 2


def _reachability(parents: list[set[int]]) -> list[int]:
    n = len(parents)
    children = [[] for _ in range(n)]
    for c, ps in enumerate(parents):
        for p in ps:
            children[p].append(c)
    order = Dag(tuple(map(str, range(n))), frozenset((p, c) for c, ps in enumerate(parents) for p in ps)).topological_order()
    reach = [0] * n
    for v in reversed(order):
        acc = 0
        for c in children[v]:
            acc |= (1 << c) | reach[c]
        reach[v] = acc
    return reach


def _climb(scorer: FamilyScorer, parents: list[set[int]], config: SearchConfig):
    n = len(parents)
    limit = n if config.max_parents is None else config.max_parents
    score = scorer.total(parents)
    trace = [score]
    iterations = 0
    while iterations < config.max_iterations:
        reach = _reachability(parents)
        moves = []
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if i in parents[j]:
                    moves.append((i, j, _DELETE, [(j, parents[j] - {i})]))
                    others = [c for c in range(n) if i in parents[c] and c != j]
                    if len(parents[i]) < limit and not any(reach[c] >> j & 1 for c in others):
                        moves.append((i, j, _REVERSE, [(j, parents[j] - {i}), (i, parents[i] | {j})]))
                elif j not in parents[i] and len(parents[j]) < limit and not reach[j] >> i & 1:
                    moves.append((i, j, _ADD, [(j, parents[j] | {i})]))
        scorer.prefetch(k for m in moves for k in m[3])
        best = None
        tol = _tol(score)
        # moves are generated in ascending (parent, child, op) order, so on a
        # near-tie the earlier candidate is kept
        for i, j, op, changes in moves:
            delta = sum(scorer(v, ps) - scorer(v, parents[v]) for v, ps in changes)
            if best is None or delta > best[0] + tol:
                best = (delta, (i, j, op), changes)
        if best is None or best[0] <= tol:
            break
        for v, ps in best[2]:
            parents[v] = set(ps)
        score = scorer.total(parents)
        trace.append(score)
        iterations += 1
    return score, iterations, trace


def _random_start(n: int, limit: int, rng: np.random.Generator) -> list[set[int]]:
    order = rng.permutation(n)
    p = min(0.5, 2.0 / max(1, n - 1))
    parents: list[set[int]] = [set() for _ in range(n)]
    for b in range(1, n):
        for a in range(b):
            u = rng.random()
            if u < p and len(parents[order[b]]) < limit:
                parents[int(order[b])].add(int(order[a]))
    return parents


def hill_climb(table: CategoricalTable, config: SearchConfig = SearchConfig()) -> ScoredDag:
    """Greedy add / delete / reverse search from the empty DAG.

    Each iteration applies the single best strictly improving move that keeps
    the graph acyclic and within ``max_parents``; ties go to the lowest
    (parent, child) pair. Restarts after the first begin from seeded random
    DAGs and the best result over all restarts is returned.
    """
    n = table.n_vars
    if n < 2:
        raise ParameterError("hill climbing needs at least 2 variables")
    scorer = FamilyScorer(table, config)
    limit = n if config.max_parents is None else config.max_parents
    best = None
    for restart in range(config.restarts):
        if restart == 0:
            start = [set() for _ in range(n)]
        else:
            start = _random_start(n, limit, np.random.default_rng([config.seed, restart]))
        parents = [set(p) for p in start]
        score, iters, trace = _climb(scorer, parents, config)
        if best is None or score > best[0] + _tol(best[0]):
            best = (score, iters, trace, parents)
    score, iters, trace, parents = best
    edges = frozenset((p, c) for c, ps in enumerate(parents) for p in ps)
    return ScoredDag(Dag(table.variables, edges), float(score), iters, tuple(trace))
