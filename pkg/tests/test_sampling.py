import numpy as np
import pytest

from cpdforge.cpd import BayesNet, Cpd
from cpdforge.dag import Dag
from cpdforge.errors import ParameterError
from cpdforge.sampling import (
    FIXTURES,
    SampleConfig,
    chain3,
    collider3,
    counter_uniforms,
    forward_sample,
    make_fixture,
    mixture,
    table2_dag,
    reference_net,
)

YN = ("No", "Yes")


def _single(p_yes):
    return BayesNet(Dag.empty(["v"]), (YN,), (Cpd(0, (), (), [[1 - p_yes, p_yes]]),))


def test_degenerate_node():
    t = forward_sample(_single(1.0), SampleConfig(500, 3))
    assert (t.rows == 1).all()


def test_marginal_within_three_sigma():
    n = 100_000
    t = forward_sample(_single(0.75), SampleConfig(n, 1))
    assert abs(t.rows.mean() - 0.75) < 3 * np.sqrt(0.75 * 0.25 / n)


def test_chain_conditionals_within_three_sigma():
    t = forward_sample(chain3(0.9), SampleConfig(50_000, 2))
    a, b = t.rows[:, 0], t.rows[:, 1]
    for pa, want in ((1, 0.9), (0, 0.1)):
        sel = b[a == pa]
        assert abs(sel.mean() - want) < 3 * np.sqrt(want * (1 - want) / len(sel))


def test_fixture_edges():
    assert collider3().dag.edges == {(2, 0), (2, 1)}
    assert chain3().dag.edges == {(0, 1), (1, 2)}
    d = table2_dag()
    assert (d.n_nodes, d.n_edges) == (24, 109)


def test_seed_determinism_and_difference():
    net = reference_net()
    a = forward_sample(net, SampleConfig(300, 5)).to_csv()
    b = forward_sample(net, SampleConfig(300, 5)).to_csv()
    c = forward_sample(net, SampleConfig(300, 6)).to_csv()
    assert a == b and a != c


def test_prefix_stability():
    net = chain3()
    small = forward_sample(net, SampleConfig(100, 8)).rows
    big = forward_sample(net, SampleConfig(1000, 8)).rows
    assert np.array_equal(small, big[:100])


MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _py_mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def _py_uniform(seed, record, stream):
    key = _py_mix((seed * GOLDEN + stream + 1) & MASK)
    return (_py_mix((key + (record + 1) * GOLDEN) & MASK) >> 11) / 2.0**53


def test_counter_uniforms_match_pure_python():
    for seed, stream in [(0, 0), (7, 3), (2**40 + 5, 23)]:
        u = counter_uniforms(seed, np.arange(50, dtype=np.uint64), stream)
        assert u.tolist() == [_py_uniform(seed, r, stream) for r in range(50)]
    u = counter_uniforms(0, np.arange(3, dtype=np.uint64), 0)
    assert u.tolist() == [0.7497482413580301, 0.37239342287916577, 0.4382839062845528]
    again = counter_uniforms(0, np.array([2, 0, 1], dtype=np.uint64), 0)
    assert again.tolist() == [u[2], u[0], u[1]]


def test_counter_uniforms_are_uniform():
    u = counter_uniforms(123, np.arange(200_000, dtype=np.uint64), 7)
    hist = np.histogram(u, bins=10, range=(0, 1))[0]
    assert np.abs(hist / 20_000 - 1).max() < 0.03


def test_statistical_soundness_reference_net():
    net = reference_net()
    t = forward_sample(net, SampleConfig(40_000, 11))
    cards = net.cardinalities
    for v, cpd in enumerate(net.cpds):
        cfg = np.zeros(t.n_rows, dtype=np.int64)
        for p in cpd.parents:
            cfg = cfg * cards[p] + t.rows[:, p]
        for i in range(cpd.table.shape[0]):
            mask = cfg == i
            m = int(mask.sum())
            for k in range(cards[v]):
                p = cpd.table[i, k]
                if m * p < 100 or m * (1 - p) < 100:
                    continue
                emp = np.mean(t.rows[mask, v] == k)
                assert abs(emp - p) <= 4 * np.sqrt(p * (1 - p) / m)


def test_sample_config_validation():
    with pytest.raises(ParameterError):
        SampleConfig(0)
    with pytest.raises(ParameterError):
        make_fixture("nope")


def test_mixture_fixture():
    t, labels = mixture(k=4, n_per_cluster=20, seed=1)
    assert t.n_rows == 80 and t.n_vars == 24
    assert np.bincount(labels).tolist() == [20] * 4
    assert set(FIXTURES) == {"chain3", "collider3", "table2_dag", "mixture_k"}
