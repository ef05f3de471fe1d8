import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpdforge.dag import Dag, load_dag
from cpdforge.errors import CycleError, NodeLookupError, SelfLoopError
from cpdforge.sampling import table2_dag

CHAIN = Dag(("A", "B", "C"), frozenset({(0, 1), (1, 2)}))
DIAMOND = Dag(("A", "B", "C", "D"), frozenset({(0, 1), (0, 2), (1, 3), (2, 3)}))


@st.composite
def random_dags(draw, max_nodes=7):
    n = draw(st.integers(1, max_nodes))
    perm = draw(st.permutations(range(n)))
    pairs = [(perm[i], perm[j]) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = frozenset(p for p, m in zip(pairs, mask) if m)
    return Dag(tuple(f"n{i}" for i in range(n)), edges)


def _nx(d):
    g = nx.DiGraph()
    g.add_nodes_from(range(d.n_nodes))
    g.add_edges_from(d.edges)
    return g


def test_reference_dag_shape_and_edges():
    d = table2_dag()
    assert (d.n_nodes, d.n_edges) == (24, 109)
    assert (d.index("B"), d.index("H")) in d.edges
    assert (d.index("C"), d.index("B")) in d.edges


def test_zero_matrix_and_two_cycle():
    assert Dag.from_adjacency(np.zeros((3, 3))).n_edges == 0
    with pytest.raises(CycleError) as e:
        Dag.from_adjacency([[0, 1], [1, 0]], ["a", "b"])
    assert "a -> b -> a" in str(e.value) or "b -> a -> b" in str(e.value)


def test_self_loop_rejected():
    with pytest.raises(SelfLoopError):
        Dag.from_adjacency([[1, 0], [0, 0]])


def test_chain_queries():
    assert CHAIN.ancestors(["C"]) == {0, 1}
    assert CHAIN.descendants(["A"]) == {1, 2}
    assert CHAIN.descendants(["C"]) == frozenset()
    assert CHAIN.ancestors(["A"]) == frozenset()
    assert CHAIN.topological_order() == [0, 1, 2]


def test_diamond():
    assert DIAMOND.descendants(["A"]) == {1, 2, 3}
    assert DIAMOND.topological_order() == [0, 1, 2, 3]


def test_isolated_tie_break():
    assert Dag.empty(["x", "y", "z"]).topological_order() == [0, 1, 2]


def test_unknown_node():
    with pytest.raises(NodeLookupError):
        CHAIN.parents("Z")


def test_reference_dag_ancestor_set():
    d = table2_dag()
    fc = d.names(d.ancestors(["D", "V"]))
    g = _nx(d)
    want = set()
    for t in ("D", "V"):
        want |= nx.ancestors(g, d.index(t))
    want -= {d.index("D"), d.index("V")}
    assert set(fc) == set(d.names(want))
    assert fc == ["B", "C", "H", "L", "M", "N", "R", "S"]


@given(random_dags())
def test_against_networkx(d):
    g = _nx(d)
    for v in range(d.n_nodes):
        assert d.ancestors([v]) == nx.ancestors(g, v)
        assert d.descendants([v]) == nx.descendants(g, v)
        assert set(d.parents(v)) == set(g.predecessors(v))
    order = d.topological_order()
    assert order == list(nx.lexicographical_topological_sort(g))


@given(random_dags())
def test_adjacency_roundtrip(d):
    assert Dag.from_adjacency(d.to_adjacency(), d.node_names) == d
    assert Dag.from_json(d.to_json()) == d
    assert Dag.from_adjacency_csv(d.to_adjacency_csv()) == d


@given(random_dags())
def test_duality_and_markov_set(d):
    for a, b in itertools.product(range(d.n_nodes), repeat=2):
        assert (a in d.ancestors([b])) == (b in d.descendants([a]))
    for v in range(d.n_nodes):
        rest = set(range(d.n_nodes)) - d.descendants([v]) - {v} - set(d.parents(v))
        assert d.non_descendants(v) - set(d.parents(v)) == rest


def test_load_dag_files(tmp_path):
    (tmp_path / "d.json").write_text(DIAMOND.to_json())
    (tmp_path / "d.csv").write_text(DIAMOND.to_adjacency_csv())
    assert load_dag(tmp_path / "d.json") == DIAMOND
    assert load_dag(tmp_path / "d.csv") == DIAMOND
