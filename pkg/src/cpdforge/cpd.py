"""Conditional probability tables over a fixed DAG: estimation, lookup, reports."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping

import numpy as np

from ._counting import config_index, config_states, family_counts, ordered_map
from .dag import Dag
from .data import CategoricalTable
from .errors import AssignmentError, FormatError, NumericError, ParameterError, VariableMismatchError

ROW_SUM_TOL = 1e-9


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Cpd:
    """P(variable | parents) as a ``(prod parent_cards, card)`` table.

    Row ``i`` is the parent configuration whose mixed-radix index is ``i``,
    first parent most significant. ``unseen[i]`` marks rows that had no
    observations and were filled with a uniform distribution.
    """

    variable: int
    parents: tuple[int, ...]
    parent_cards: tuple[int, ...]
    table: np.ndarray
    unseen: np.ndarray = field(default=None)

    def __post_init__(self):
        table = _readonly(self.table)
        q = int(np.prod(self.parent_cards, dtype=np.int64))
        if len(self.parents) != len(self.parent_cards):
            raise FormatError("one cardinality per parent is required")
        if table.ndim != 2 or table.shape[0] != q or table.shape[1] < 2:
            raise FormatError(f"CPD table for node {self.variable} has shape {table.shape}, expected ({q}, >=2)")
        if not np.isfinite(table).all() or (table < 0).any() or (table > 1).any():
            raise NumericError(f"CPD for node {self.variable} has entries outside [0, 1]")
        sums = table.sum(axis=1)
        if np.abs(sums - 1.0).max(initial=0.0) > ROW_SUM_TOL:
            raise NumericError(f"CPD rows for node {self.variable} do not sum to 1")
        unseen = np.zeros(q, dtype=bool) if self.unseen is None else np.array(self.unseen, dtype=bool)
        unseen.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "unseen", unseen)
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        object.__setattr__(self, "parent_cards", tuple(int(c) for c in self.parent_cards))

    @property
    def card(self) -> int:
        return self.table.shape[1]

    def row(self, parent_states) -> np.ndarray:
        idx = 0
        for c, s in zip(self.parent_cards, parent_states):
            idx = idx * c + s
        return self.table[idx]

    def to_dict(self, names=None) -> dict:
        label = (lambda i: names[i]) if names is not None else (lambda i: i)
        return {
            "variable": label(self.variable),
            "parents": [label(p) for p in self.parents],
            "parent_cards": list(self.parent_cards),
            "table": self.table.tolist(),
            "flags": {"unseen_parent_configs": np.flatnonzero(self.unseen).tolist()},
        }


@dataclass(frozen=True)
class BayesNet:
    """A DAG, the state labels of every node and one CPD per node."""

    dag: Dag
    states: tuple[tuple[str, ...], ...]
    cpds: tuple[Cpd, ...]

    def __post_init__(self):
        if len(self.states) != self.dag.n_nodes or len(self.cpds) != self.dag.n_nodes:
            raise VariableMismatchError("need one state list and one CPD per DAG node")
        for v, cpd in enumerate(self.cpds):
            if cpd.variable != v or cpd.parents != self.dag.parents(v):
                raise VariableMismatchError(
                    f"CPD for {self.dag.node_names[v]!r} has parents {cpd.parents}, DAG says {self.dag.parents(v)}"
                )
            if cpd.card != len(self.states[v]):
                raise VariableMismatchError(f"CPD for {self.dag.node_names[v]!r} has wrong number of states")
            if cpd.parent_cards != tuple(len(self.states[p]) for p in cpd.parents):
                raise VariableMismatchError(f"parent cardinalities for {self.dag.node_names[v]!r} disagree")

    @property
    def names(self) -> tuple[str, ...]:
        return self.dag.node_names

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.states)

    def state_index(self, node: int, state) -> int:
        if isinstance(state, (int, np.integer)) and not isinstance(state, bool):
            if not 0 <= state < len(self.states[node]):
                raise AssignmentError(f"state index {state} out of range for {self.names[node]!r}")
            return int(state)
        try:
            return self.states[node].index(state)
        except ValueError:
            raise AssignmentError(f"unknown state {state!r} for {self.names[node]!r}") from None

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "states": [list(s) for s in self.states],
            "edges": [list(e) for e in self.dag.sorted_edges()],
            "cpds": [c.to_dict(self.names) for c in self.cpds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "BayesNet":
        names = list(obj["names"])
        if "edges" in obj:
            dag = Dag(tuple(names), frozenset(tuple(e) for e in obj["edges"]))
        else:
            dag = Dag(tuple(names), frozenset(
                (names.index(p), names.index(c["variable"])) for c in obj["cpds"] for p in c["parents"]
            ))
        by_var = {c["variable"]: c for c in obj["cpds"]}
        cpds = []
        for v, name in enumerate(names):
            c = by_var.get(name, by_var.get(v))
            if c is None:
                raise FormatError(f"no CPD for node {name!r}")
            parents = [names.index(p) if isinstance(p, str) else int(p) for p in c["parents"]]
            order = np.argsort(parents, kind="stable")
            cards = [int(x) for x in c["parent_cards"]]
            table = np.asarray(c["table"], dtype=np.float64)
            if list(order) != list(range(len(parents))):
                # re-index rows so parents are ascending
                table = table.reshape(*cards, table.shape[1]).transpose(*order, len(cards)).reshape(-1, table.shape[1])
                parents = [parents[i] for i in order]
                cards = [cards[i] for i in order]
            unseen = np.zeros(table.shape[0], dtype=bool)
            unseen[c.get("flags", {}).get("unseen_parent_configs", [])] = True
            cpds.append(Cpd(v, tuple(parents), tuple(cards), table, unseen))
        return cls(dag, tuple(tuple(s) for s in obj["states"]), tuple(cpds))

    @classmethod
    def from_json(cls, text: str) -> "BayesNet":
        return cls.from_dict(json.loads(text))


def _check(table: CategoricalTable, dag: Dag) -> None:
    if tuple(table.variables) != tuple(dag.node_names):
        raise VariableMismatchError(f"table variables {table.variables} do not match DAG nodes {dag.node_names}")


def _fit(table, dag, pseudo):
    _check(table, dag)
    cards = table.cardinalities

    def one(v):
        parents = dag.parents(v)
        counts = family_counts(table.rows, cards, v, parents).astype(np.float64)
        q, r = counts.shape
        unseen = counts.sum(axis=1) == 0
        if pseudo is None:
            totals = counts.sum(axis=1, keepdims=True)
            probs = np.divide(counts, totals, out=np.full_like(counts, 1.0 / r), where=totals > 0)
        else:
            alpha = pseudo / (r * q)
            probs = (counts + alpha) / (counts.sum(axis=1, keepdims=True) + alpha * r)
        return Cpd(v, parents, tuple(cards[p] for p in parents), probs, unseen)

    cpds = ordered_map(one, range(dag.n_nodes))
    return BayesNet(dag, table.states, tuple(cpds))


def fit_mle(table: CategoricalTable, dag: Dag) -> BayesNet:
    """Relative-frequency CPDs; unobserved parent configurations get a uniform row."""
    return _fit(table, dag, None)


def fit_bayesian(table: CategoricalTable, dag: Dag, ess: float = 1.0) -> BayesNet:
    """Dirichlet-smoothed CPDs.

    Each cell receives ``alpha = ess / (card * n_parent_configs)`` pseudo
    counts before normalising.
    """
    if not ess > 0:
        raise ParameterError(f"ess must be positive, got {ess}")
    return _fit(table, dag, float(ess))


def _parent_states(net: BayesNet, v: int, assignment: Mapping) -> list[int]:
    given = {net.dag.index(k): val for k, val in assignment.items()} if assignment else {}
    parents = net.dag.parents(v)
    missing = [net.names[p] for p in parents if p not in given]
    extra = [net.names[k] for k in given if k not in parents]
    if missing or extra:
        raise AssignmentError(
            f"assignment for {net.names[v]!r} must cover exactly its parents "
            f"{[net.names[p] for p in parents]}; missing {missing}, extra {extra}"
        )
    return [net.state_index(p, given[p]) for p in parents]


def cpd_lookup(net: BayesNet, var, parent_assignment: Mapping | None = None) -> np.ndarray:
    """The stored distribution of ``var`` for one assignment of its parents."""
    v = net.dag.index(var)
    states = _parent_states(net, v, parent_assignment or {})
    return net.cpds[v].row(states)


def joint_probability(net: BayesNet, assignment: Mapping) -> float:
    """Product of CPD factors, accumulated in log space."""
    given = {net.dag.index(k): net.state_index(net.dag.index(k), s) for k, s in assignment.items()}
    if set(given) != set(range(net.dag.n_nodes)):
        missing = [net.names[i] for i in range(net.dag.n_nodes) if i not in given]
        raise AssignmentError(f"joint probability needs every node; missing {missing}")
    logp = 0.0
    for v, cpd in enumerate(net.cpds):
        p = cpd.row([given[q] for q in cpd.parents])[given[v]]
        if p == 0.0:
            return 0.0
        logp += math.log(p)
    return math.exp(logp)


def format_prob(x: float) -> str:
    """Two-decimal rendering used in severity reports (``1.0``, ``0.91``, ``0.5``)."""
    return repr(round(float(x) + 0.0, 2) + 0.0)


@dataclass(frozen=True, eq=False)
class SeverityReport:
    target: str
    target_states: tuple[str, ...]
    parents: tuple[str, ...]
    columns: tuple[tuple[str, ...], ...]
    values: np.ndarray  # (n_target_states, n_columns), full precision

    def rounded(self) -> np.ndarray:
        return np.round(self.values, 2)

    def cell(self, target_state: str, parent_states: Mapping[str, str]) -> str:
        col = self.columns.index(tuple(parent_states[p] for p in self.parents))
        return format_prob(self.values[self.target_states.index(target_state), col])

    def rows(self) -> list[list[str]]:
        out = []
        for k, parent in enumerate(self.parents):
            out.append(["", *(f"{parent} ({col[k]})" for col in self.columns)])
        for i, s in enumerate(self.target_states):
            out.append([f"{self.target} ({s})", *(format_prob(x) for x in self.values[i])])
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.rows())
        return buf.getvalue()


def severity_report(net: BayesNet, target) -> SeverityReport:
    """Full CPD of ``target`` with one column per parent configuration.

    Columns follow the mixed-radix order of the CPD rows, so the last parent
    changes fastest.
    """
    v = net.dag.index(target)
    cpd = net.cpds[v]
    columns = tuple(
        tuple(net.states[p][s] for p, s in zip(cpd.parents, config_states(net.cardinalities, cpd.parents, i)))
        for i in range(cpd.table.shape[0])
    )
    return SeverityReport(
        net.names[v],
        net.states[v],
        tuple(net.names[p] for p in cpd.parents),
        columns,
        cpd.table.T.copy(),
    )


def all_assignments(net: BayesNet):
    """Every full assignment as a dict of node index to state index."""
    for combo in product(*(range(c) for c in net.cardinalities)):
        yield dict(enumerate(combo))


__all__ = [
    "BayesNet",
    "Cpd",
    "SeverityReport",
    "all_assignments",
    "config_index",
    "cpd_lookup",
    "fit_bayesian",
    "fit_mle",
    "format_prob",
    "joint_probability",
    "severity_report",
]
