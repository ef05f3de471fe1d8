"""Directed acyclic graphs over indexed variables."""
from __future__ import annotations

import csv
import heapq
import io
import json
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CycleError, FormatError, GraphError, NodeLookupError, SelfLoopError


def find_cycle(n_nodes: int, edges: Iterable[tuple[int, int]]) -> list[int] | None:
    """Return one directed cycle as a node list, or None if the graph is acyclic."""
    children = [[] for _ in range(n_nodes)]
    for i, j in edges:
        children[i].append(j)
    for c in children:
        c.sort()
    colour = [0] * n_nodes  # 0 unseen, 1 on stack, 2 done
    for root in range(n_nodes):
        if colour[root]:
            continue
        stack = [(root, iter(children[root]))]
        path = [root]
        colour[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = 2
                stack.pop()
                path.pop()
            elif colour[nxt] == 1:
                return path[path.index(nxt):]
            elif colour[nxt] == 0:
                colour[nxt] = 1
                stack.append((nxt, iter(children[nxt])))
                path.append(nxt)
    return None


@dataclass(frozen=True)
class Dag:
    """A DAG whose nodes are positions ``0..n_nodes-1``; names are metadata."""

    node_names: tuple[str, ...]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        names = tuple(str(n) for n in self.node_names)
        if len(set(names)) != len(names):
            raise GraphError(f"duplicate node names: {names}")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        n = len(names)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for {n} nodes")
            if i == j:
                raise SelfLoopError(f"self-loop on node {names[i]!r}")
        cycle = find_cycle(n, edges)
        if cycle is not None:
            raise CycleError(cycle, names)
        object.__setattr__(self, "node_names", names)
        object.__setattr__(self, "edges", edges)
        parents = [[] for _ in range(n)]
        children = [[] for _ in range(n)]
        for i, j in sorted(edges):
            parents[j].append(i)
            children[i].append(j)
        object.__setattr__(self, "_parents", tuple(tuple(p) for p in parents))
        object.__setattr__(self, "_children", tuple(tuple(c) for c in children))

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def index(self, node: str | int) -> int:
        if isinstance(node, (int, np.integer)):
            if not 0 <= node < self.n_nodes:
                raise NodeLookupError(f"node index {node} out of range")
            return int(node)
        try:
            return self.node_names.index(node)
        except ValueError:
            raise NodeLookupError(f"unknown node {node!r}") from None

    def names(self, nodes: Iterable[int]) -> list[str]:
        return [self.node_names[i] for i in sorted(nodes)]

    def parents(self, node: str | int) -> tuple[int, ...]:
        """Parent indices in ascending order."""
        return self._parents[self.index(node)]

    def children(self, node: str | int) -> tuple[int, ...]:
        return self._children[self.index(node)]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def _reach(self, targets, step) -> frozenset[int]:
        start = {self.index(t) for t in _as_collection(targets)}
        seen: set[int] = set()
        frontier = list(start)
        while frontier:
            node = frontier.pop()
            for nxt in step[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return frozenset(seen - start)

    def ancestors(self, targets) -> frozenset[int]:
        """Nodes with a directed path into any target, targets excluded."""
        return self._reach(targets, self._parents)

    def descendants(self, targets) -> frozenset[int]:
        """Nodes reachable from any target, targets excluded."""
        return self._reach(targets, self._children)

    def non_descendants(self, node: str | int) -> frozenset[int]:
        """Nodes other than ``node``, its parents and its descendants."""
        v = self.index(node)
        excluded = self.descendants([v]) | {v} | set(self.parents(v))
        return frozenset(range(self.n_nodes)) - excluded

    def topological_order(self) -> list[int]:
        """Kahn's algorithm, smallest index first among ready nodes."""
        indeg = [len(p) for p in self._parents]
        ready = [i for i, d in enumerate(indeg) if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            node = heapq.heappop(ready)
            order.append(node)
            for c in self._children[node]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        return order

    def to_adjacency(self) -> np.ndarray:
        mat = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int64)
        for i, j in self.edges:
            mat[i, j] = 1
        return mat

    @classmethod
    def from_adjacency(cls, matrix, names: Sequence[str] | None = None) -> "Dag":
        """``matrix[i][j] == 1`` means an edge from node i to node j."""
        mat = np.asarray(matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise GraphError(f"adjacency matrix must be square, got shape {mat.shape}")
        if not np.isin(mat, (0, 1)).all():
            raise GraphError("adjacency entries must be 0 or 1")
        n = mat.shape[0]
        if names is None:
            names = [str(i) for i in range(n)]
        if len(names) != n:
            raise GraphError(f"{len(names)} names for {n} nodes")
        diag = np.flatnonzero(np.diag(mat))
        if diag.size:
            raise SelfLoopError(f"nonzero diagonal at node {names[diag[0]]!r}")
        return cls(tuple(names), frozenset(map(tuple, np.argwhere(mat == 1).tolist())))

    @classmethod
    def empty(cls, names: Sequence[str]) -> "Dag":
        return cls(tuple(names), frozenset())

    def with_edges(self, add=(), remove=()) -> "Dag":
        return Dag(self.node_names, (self.edges - set(remove)) | set(add))

    def to_dict(self) -> dict:
        return {"names": list(self.node_names), "edges": [list(e) for e in self.sorted_edges()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "Dag":
        try:
            return cls(tuple(obj["names"]), frozenset(tuple(e) for e in obj["edges"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, GraphError):
                raise
            raise FormatError(f"malformed DAG JSON: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Dag":
        return cls.from_dict(json.loads(text))

    def to_adjacency_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Features", *self.node_names])
        for name, row in zip(self.node_names, self.to_adjacency()):
            w.writerow([name, *row.tolist()])
        return buf.getvalue()

    @classmethod
    def from_adjacency_csv(cls, text: str) -> "Dag":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows:
            raise FormatError("empty adjacency CSV")
        col_names = [c.strip() for c in rows[0][1:]]
        row_names = [r[0].strip() for r in rows[1:]]
        if col_names != row_names:
            raise FormatError("adjacency CSV row and column names differ")
        try:
            mat = np.array([[int(c) for c in r[1:]] for r in rows[1:]], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"non-integer adjacency cell: {exc}") from None
        return cls.from_adjacency(mat, col_names)


def _as_collection(targets):
    if isinstance(targets, (str, int, np.integer)):
        return [targets]
    return list(targets)


def load_dag(path: str | os.PathLike) -> Dag:
    """Load a DAG from ``.json`` or adjacency ``.csv``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if str(path).lower().endswith(".csv"):
        return Dag.from_adjacency_csv(text)
    return Dag.from_json(text)
