import itertools
import json
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpdforge.cpd import (
    BayesNet,
    Cpd,
    all_assignments,
    cpd_lookup,
    fit_bayesian,
    fit_mle,
    format_prob,
    joint_probability,
    severity_report,
)
from cpdforge.dag import Dag
from cpdforge.data import CategoricalTable
from cpdforge.errors import AssignmentError, NumericError, ParameterError, VariableMismatchError
from cpdforge.sampling import SampleConfig, chain3, collider3, forward_sample, reference_cpd, reference_net

YN = ("no", "yes")


def table(variables, records):
    return CategoricalTable.from_labels(variables, records, [YN] * len(variables))


def test_marginal_frequency():
    t = table(["v"], [["yes"], ["yes"], ["yes"], ["no"]])
    net = fit_mle(t, Dag.empty(["v"]))
    assert cpd_lookup(net, "v").tolist() == [0.25, 0.75]


def test_unseen_parent_config_uniform_and_flagged():
    t = table(["a", "b"], [["yes", "yes"], ["yes", "no"]])
    net = fit_mle(t, Dag(("a", "b"), frozenset({(0, 1)})))
    assert cpd_lookup(net, "b", {"a": "no"}).tolist() == [0.5, 0.5]
    assert net.cpds[1].unseen.tolist() == [True, False]
    assert net.to_dict()["cpds"][1]["flags"]["unseen_parent_configs"] == [0]


def test_constructed_hundred_rows():
    rec = [["yes", "yes"]] * 30 + [["yes", "no"]] * 10 + [["no", "yes"]] * 20 + [["no", "no"]] * 40
    net = fit_mle(table(["a", "b"], rec), Dag(("a", "b"), frozenset({(0, 1)})))
    assert cpd_lookup(net, "b", {"a": "yes"})[1] == 0.75


def test_bayesian_prior_only_and_formula():
    empty = CategoricalTable(("v",), (YN,), np.zeros((0, 1), int))
    for ess in (0.5, 1.0, 7.0):
        assert fit_bayesian(empty, Dag.empty(["v"]), ess).cpds[0].table.tolist() == [[0.5, 0.5]]
    t = table(["v"], [["yes"], ["yes"], ["yes"], ["no"]])
    assert cpd_lookup(fit_bayesian(t, Dag.empty(["v"]), 2.0), "v")[1] == pytest.approx(4 / 6, abs=1e-12)


def test_bayesian_ess_validation():
    t = table(["v"], [["yes"], ["no"]])
    with pytest.raises(ParameterError):
        fit_bayesian(t, Dag.empty(["v"]), 0.0)


def test_variable_mismatch():
    t = table(["v"], [["yes"], ["no"]])
    with pytest.raises(VariableMismatchError):
        fit_mle(t, Dag.empty(["w"]))


def test_reference_icu_values():
    net = reference_cpd("icu")
    assert cpd_lookup(net, "N", {"B": "No", "C": "No", "M": "No"}).tolist() == [1.0, 0.0]
    assert cpd_lookup(net, "N", {"B": "Yes", "C": "Yes", "M": "Yes"})[1] == 0.54
    assert format_prob(cpd_lookup(net, "N", {"B": "Yes", "C": "Yes", "M": "Yes"})[1]) == "0.54"


def test_reference_ventilation_values():
    net = reference_cpd("ventilation")
    assert cpd_lookup(net, "O", {"C": "Yes", "M": "Yes", "N": "Yes", "S": "Yes"})[1] == 0.63
    assert cpd_lookup(net, "O", {"C": "No", "M": "No", "N": "No", "S": "No"})[0] == 1.0
    rep = severity_report(net, "O")
    assert rep.cell("No", {"C": "No", "M": "No", "N": "No", "S": "No"}) == "1.0"
    assert rep.cell("Yes", {"C": "Yes", "M": "Yes", "N": "Yes", "S": "Yes"}) == "0.63"


def test_reference_net_embeds_severity_tables():
    net = reference_net()
    assert cpd_lookup(net, "N", {"B": "Yes", "C": "Yes", "M": "Yes"})[1] == 0.54
    assert cpd_lookup(net, "O", {"C": "Yes", "M": "Yes", "N": "Yes", "S": "Yes"})[1] == 0.63


def test_parentless_lookup_and_report():
    net = chain3()
    assert cpd_lookup(net, "A").tolist() == [0.5, 0.5]
    rep = severity_report(net, "A")
    assert len(rep.columns) == 1 and rep.values.shape == (2, 1)


def test_lookup_errors():
    net = chain3()
    with pytest.raises(AssignmentError):
        cpd_lookup(net, "B", {})
    with pytest.raises(AssignmentError):
        cpd_lookup(net, "B", {"A": "Yes", "C": "No"})
    with pytest.raises(AssignmentError):
        cpd_lookup(net, "B", {"A": "Maybe"})


def test_joint_hand_products():
    single = BayesNet(Dag.empty(["v"]), (YN,), (Cpd(0, (), (), [[0.25, 0.75]]),))
    assert joint_probability(single, {"v": "yes"}) == pytest.approx(0.75, abs=1e-15)
    net = chain3(0.8)
    assert joint_probability(net.__class__(
        Dag(("A", "B"), frozenset({(0, 1)})), net.states[:2], net.cpds[:2]), {"A": "Yes", "B": "Yes"}) == pytest.approx(0.4)
    with pytest.raises(AssignmentError):
        joint_probability(net, {"A": "Yes"})


def test_cpd_validation():
    with pytest.raises(NumericError):
        Cpd(0, (), (), [[0.5, 0.6]])
    with pytest.raises(NumericError):
        Cpd(0, (), (), [[1.5, -0.5]])


def _oracle_counts(rows, v, parents):
    joint = Counter((tuple(r[p] for p in parents), r[v]) for r in rows)
    marg = Counter(tuple(r[p] for p in parents) for r in rows)
    return joint, marg


def _random_net_and_table(seed, n_rows=60):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    cards = rng.integers(2, 4, n)
    perm = rng.permutation(n)
    edges = frozenset((int(perm[i]), int(perm[j])) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5)
    dag = Dag(tuple(f"X{i}" for i in range(n)), edges)
    rows = np.column_stack([rng.integers(0, c, n_rows) for c in cards])
    t = CategoricalTable(dag.node_names, tuple(tuple(f"s{k}" for k in range(c)) for c in cards), rows)
    return t, dag


@given(st.integers(0, 100_000))
def test_mle_equals_hand_counts_exactly(seed):
    t, dag = _random_net_and_table(seed)
    net = fit_mle(t, dag)
    rows = t.rows.tolist()
    for v in range(dag.n_nodes):
        parents = dag.parents(v)
        joint, marg = _oracle_counts(rows, v, parents)
        for pcs in itertools.product(*(range(t.cardinalities[p]) for p in parents)):
            got = net.cpds[v].row(pcs)
            for k in range(t.cardinalities[v]):
                if marg[pcs]:
                    assert Fraction(got[k]).limit_denominator(10_000) == Fraction(joint[(pcs, k)], marg[pcs])
                    assert abs(got[k] - joint[(pcs, k)] / marg[pcs]) <= 1e-12
                else:
                    assert got[k] == 1 / t.cardinalities[v]


@given(st.integers(0, 100_000), st.floats(0.01, 50))
def test_rows_normalised_and_bayes_limit(seed, ess):
    t, dag = _random_net_and_table(seed)
    mle, bay, tiny = fit_mle(t, dag), fit_bayesian(t, dag, ess), fit_bayesian(t, dag, 1e-6)
    for a, b, c in zip(mle.cpds, bay.cpds, tiny.cpds):
        assert np.abs(a.table.sum(axis=1) - 1).max() <= 1e-9
        assert np.abs(b.table.sum(axis=1) - 1).max() <= 1e-9
        seen = ~a.unseen
        assert np.abs(a.table[seen] - c.table[seen]).max(initial=0) <= 1e-5


@given(st.integers(0, 100_000))
def test_joint_sums_to_one(seed):
    t, dag = _random_net_and_table(seed)
    net = fit_bayesian(t, dag)
    total = sum(joint_probability(net, {net.names[v]: s for v, s in a.items()}) for a in all_assignments(net))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_json_roundtrip():
    net = reference_net()
    back = BayesNet.from_json(net.to_json())
    assert back.dag == net.dag
    for a, b in zip(back.cpds, net.cpds):
        assert np.array_equal(a.table, b.table)


def test_json_parent_reordering():
    net = chain3()
    obj = json.loads(net.to_json())
    obj["edges"] = [[0, 2], [1, 2]]
    obj["cpds"][2] = {"variable": "C", "parents": ["B", "A"], "parent_cards": [2, 2],
                      "table": [[0.1, 0.9], [0.2, 0.8], [0.3, 0.7], [0.4, 0.6]]}
    obj["cpds"][1] = {"variable": "B", "parents": [], "parent_cards": [], "table": [[0.5, 0.5]]}
    back = BayesNet.from_dict(obj)
    # row for (A=Yes, B=No) was listed as (B=No, A=Yes) -> index 1
    assert cpd_lookup(back, "C", {"A": "Yes", "B": "No"}).tolist() == [0.2, 0.8]


def test_markov_factorisation_on_common_cause():
    data = forward_sample(collider3(0.8), SampleConfig(100_000, 4))
    net = fit_mle(data, collider3().dag)
    rows = data.rows
    for c in (0, 1):
        sub = rows[rows[:, 2] == c]
        for a, b in itertools.product((0, 1), repeat=2):
            emp = np.mean((sub[:, 0] == a) & (sub[:, 1] == b))
            model = net.cpds[0].row([c])[a] * net.cpds[1].row([c])[b]
            assert abs(emp - model) < 0.01


def test_mle_converges_to_generator():
    truth = reference_net()
    # restrict to a binary 4-node sub-network: B, C, M roots drive N
    sub = reference_cpd("icu")
    data = forward_sample(sub, SampleConfig(100_000, 9))
    fitted = fit_mle(data, sub.dag)
    for a, b in zip(fitted.cpds, sub.cpds):
        assert np.abs(a.table - b.table).max() < 0.02
    assert truth.dag.n_edges == 109


def test_severity_report_layout():
    rep = severity_report(reference_cpd("icu"), "N")
    rows = rep.rows()
    assert rows[0][1:3] == ["B (No)", "B (No)"]
    assert rows[2][1:3] == ["M (No)", "M (Yes)"]
    assert rows[3][0] == "N (No)" and rows[4][-1] == "0.54"
