"""Acceptance criteria 1-11, each printing one PASS/FAIL line at its stated tolerance."""
import itertools
import math
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np

from conftest import record_acceptance
from cpdforge.clustering import dunn_index, kmeans, select_k
from cpdforge.cpd import all_assignments, cpd_lookup, fit_bayesian, fit_mle, joint_probability
from cpdforge.dag import Dag
from cpdforge.data import CategoricalTable, encode
from cpdforge.demographic import CATEGORIES, DemographicTable, argmax_demographic, load_reference_demographics
from cpdforge.dsid import gradients, init_model
from cpdforge.pipeline import PipelineConfig, run_all
from cpdforge.sampling import (
    SampleConfig,
    chain3,
    collider3,
    forward_sample,
    mixture,
    reference_cpd,
    table2_dag,
)
from cpdforge.structure import exhaustive_search, hill_climb

from test_clustering import brute_dunn
from test_dsid import _away_from_kinks, numeric_gradients, rel_error


def _random_dag_table(rng, n_rows, max_nodes=4):
    n = int(rng.integers(1, max_nodes + 1))
    cards = [int(c) for c in rng.integers(2, 4, n)]
    perm = rng.permutation(n)
    edges = frozenset((int(perm[i]), int(perm[j])) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5)
    dag = Dag(tuple(f"X{i}" for i in range(n)), edges)
    rows = np.column_stack([rng.integers(0, c, n_rows) for c in cards])
    table = CategoricalTable(dag.node_names, tuple(tuple(f"s{k}" for k in range(c)) for c in cards), rows)
    return table, dag


def _skeleton(dag):
    return {frozenset(e) for e in dag.edges}


def test_criterion_01_cpd_rows_normalised():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        table, dag = _random_dag_table(rng, int(rng.integers(0, 200)), max_nodes=5)
        for net in (fit_mle(table, dag), fit_bayesian(table, dag, float(rng.uniform(0.01, 20)))):
            for cpd in net.cpds:
                worst = max(worst, float(np.abs(cpd.table.sum(axis=1) - 1).max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10
    record_acceptance(1, ok, f"max |row sum - 1| = {worst:.2e} over 100 fits x 2 estimators, {elapsed:.1f}s")
    assert ok


def test_criterion_02_joint_sums_to_one():
    t0 = time.perf_counter()
    nets = {"chain3": chain3(), "collider3": collider3(), "icu": reference_cpd("icu")}
    errors = {}
    for name, net in nets.items():
        assert net.dag.n_nodes <= 4
        total = math.fsum(joint_probability(net, {net.names[v]: s for v, s in a.items()}) for a in all_assignments(net))
        errors[name] = abs(total - 1)
    elapsed = time.perf_counter() - t0
    ok = max(errors.values()) <= 1e-9 and elapsed < 5
    record_acceptance(2, ok, f"|sum P - 1| per fixture {', '.join(f'{k}={v:.1e}' for k, v in errors.items())}, {elapsed:.2f}s")
    assert ok


def test_criterion_03_estimator_oracles():
    rng = np.random.default_rng(3)
    worst_mle, worst_bayes, exact = 0.0, 0.0, True
    for _ in range(20):
        table, dag = _random_dag_table(rng, int(rng.integers(5, 120)))
        mle, tiny = fit_mle(table, dag), fit_bayesian(table, dag, 1e-6)
        rows = table.rows.tolist()
        for v in range(dag.n_nodes):
            ps = dag.parents(v)
            joint = Counter((tuple(r[p] for p in ps), r[v]) for r in rows)
            marg = Counter(tuple(r[p] for p in ps) for r in rows)
            for pc in itertools.product(*(range(table.cardinalities[p]) for p in ps)):
                if not marg[pc]:
                    continue
                for k in range(table.cardinalities[v]):
                    want = Fraction(joint[(pc, k)], marg[pc])
                    got = mle.cpds[v].row(pc)[k]
                    worst_mle = max(worst_mle, abs(got - float(want)))
                    exact &= Fraction(got).limit_denominator(1000) == want
                    worst_bayes = max(worst_bayes, abs(tiny.cpds[v].row(pc)[k] - got))
    ok = worst_mle <= 1e-12 and exact and worst_bayes <= 1e-5
    record_acceptance(3, ok, f"MLE vs hand counts max err {worst_mle:.1e}; Bayes(ess=1e-6) vs MLE max err {worst_bayes:.1e} on 20 tables")
    assert ok


def test_criterion_04_structure_recovery():
    t0 = time.perf_counter()
    hits = {}
    for name, net in (("chain3", chain3(0.8)), ("collider3", collider3(0.8))):
        good = 0
        for seed in range(100):
            data = forward_sample(net, SampleConfig(50_000, seed))
            hc, ex = hill_climb(data), exhaustive_search(data)
            same_score = abs(hc.score - ex.score) <= 1e-9 * abs(ex.score)
            good += same_score and _skeleton(hc.dag) == _skeleton(net.dag)
        hits[name] = good
    elapsed = time.perf_counter() - t0
    ok = min(hits.values()) >= 95 and elapsed < 120
    record_acceptance(4, ok, f"hill-climb = exhaustive score and true skeleton: {hits} of 100 seeds, {elapsed:.1f}s")
    assert ok


def test_criterion_05_hill_climb_bound():
    rng = np.random.default_rng(5)
    equal, monotone, bounded = 0, True, True
    for _ in range(50):
        cards = [int(c) for c in rng.integers(2, 4, 3)]
        # random generating net: a random DAG with random CPDs
        perm = rng.permutation(3)
        n = int(rng.integers(30, 400))
        rows = np.zeros((n, 3), dtype=np.int64)
        edges = [(int(perm[i]), int(perm[j])) for i in range(3) for j in range(i + 1, 3) if rng.random() < 0.6]
        for v in perm:
            ps = [p for p, c in edges if c == v]
            tables = rng.dirichlet(np.ones(cards[v]) * 0.7, size=int(np.prod([cards[p] for p in ps], dtype=int)))
            cfg = np.zeros(n, dtype=np.int64)
            for p in ps:
                cfg = cfg * cards[p] + rows[:, p]
            cum = tables.cumsum(axis=1)[cfg]
            rows[:, v] = np.minimum((rng.random(n)[:, None] >= cum).sum(axis=1), cards[v] - 1)
        table = CategoricalTable(("A", "B", "C"), tuple(tuple(f"s{k}" for k in range(c)) for c in cards), rows)
        hc, ex = hill_climb(table), exhaustive_search(table)
        monotone &= all(b > a for a, b in zip(hc.trace, hc.trace[1:]))
        tol = 1e-9 * abs(ex.score)
        bounded &= hc.score <= ex.score + tol
        equal += abs(hc.score - ex.score) <= tol
    ok = monotone and bounded and equal >= 40
    record_acceptance(5, ok, f"strictly increasing traces={monotone}, hc <= exhaustive={bounded}, equal on {equal}/50 (need >= 40)")
    assert ok


def test_criterion_06_kmeans_and_dunn():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    monotone = True
    for i in range(100):
        n = int(rng.integers(5, 150))
        k = int(rng.integers(1, min(8, n) + 1))
        x = rng.normal(size=(n, int(rng.integers(1, 6)))) * rng.uniform(0.1, 10)
        h = kmeans(x, k, seed=i).sse_history
        monotone &= all(b <= a for a, b in zip(h, h[1:]))
    dunn_exact = True
    for i in range(30):
        n = int(rng.integers(3, 201))
        k = int(rng.integers(2, min(n, 7) + 1))
        x = rng.normal(size=(n, int(rng.integers(1, 5))))
        if i % 2:
            x = np.round(x)
        labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
        dunn_exact &= dunn_index(x, labels) == brute_dunn(x, labels)
    recovered, trials = 0, 0
    for k in (3, 4, 5):
        for seed in range(20):
            table, _ = mixture(k=k, n_per_cluster=40, seed=100 * k + seed)
            trials += 1
            recovered += select_k(encode(table).data, 2, 7, seed=seed).chosen_k == k
    elapsed = time.perf_counter() - t0
    rate = recovered / trials
    ok = monotone and dunn_exact and rate >= 0.95 and elapsed < 60
    record_acceptance(6, ok, f"Lloyd SSE non-increasing={monotone}, Dunn == brute force={dunn_exact}, planted K recovered {recovered}/{trials}, {elapsed:.1f}s")
    assert ok


def test_criterion_07_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(50):
        dims = [int(rng.integers(1, 6)), int(rng.integers(1, 8)), int(rng.integers(2, 5))]
        m = init_model(dims, seed=i)
        for b in m.biases:
            b[...] = rng.normal(scale=0.1, size=b.shape)
        x = _away_from_kinks(m, rng, 5)
        y = rng.integers(0, dims[-1], 5)
        _, gw, gb = gradients(m, x, y)
        worst = max(worst, rel_error([g for p in zip(gw, gb) for g in p], numeric_gradients(m, x, y, h=1e-5)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 30
    record_acceptance(7, ok, f"max relative gradient error {worst:.2e} over 50 models, {elapsed:.1f}s")
    assert ok


def _reference_config(out):
    return PipelineConfig.from_dict({
        "out": str(out),
        "sample": {"fixture": "table2_dag", "n": 20_000, "seed": 1},
        "dag": "table2_dag",
        "targets": ["V", "D"],
        "severity_nodes": ["G", "N", "O", "P"],
        "clustering": {"k_min": 2, "k_max": 10},
        "heuristic_baseline": True,
        "seed": 0,
    })


def test_criterion_08_end_to_end(tmp_path):
    t0 = time.perf_counter()
    report = run_all(_reference_config(tmp_path / "run"))
    elapsed = time.perf_counter() - t0
    acc, base = report["test_accuracy"], report["baseline"]["test_accuracy"]
    ok = acc >= 0.99 and base < acc and elapsed < 300
    record_acceptance(8, ok, f"DSID test accuracy {acc:.4f} (K={report['k']}), two-head baseline {base:.4f}, "
                             f"DSID score min/max {report['prediction_score']['min']:.2f}/{report['prediction_score']['max']:.2f}, {elapsed:.1f}s")
    assert ok


def test_criterion_09_reference_tables():
    d = table2_dag()
    icu = cpd_lookup(reference_cpd("icu"), "N", {"B": "Yes", "C": "Yes", "M": "Yes"})[1]
    cat, p = argmax_demographic(load_reference_demographics(), 6)
    ok = (d.n_nodes, d.n_edges) == (24, 109) and icu == 0.54 and cat == ("Female", "20 - 29 Years") and p == 0.18
    record_acceptance(9, ok, f"DAG {d.n_nodes} nodes / {d.n_edges} edges; ICU entry {icu}; C6 -> {' '.join(cat)} at {p}")
    assert ok


def test_criterion_10_demographic_tables():
    rng = np.random.default_rng(10)
    stochastic, consistent = True, True
    for _ in range(1000):
        k = int(rng.integers(1, 30))
        counts = rng.integers(0, 5, size=(k, 18)) * (rng.random((k, 18)) < 0.5)
        counts[:, 0] += counts.sum(axis=1) == 0
        probs = counts / counts.sum(axis=1, keepdims=True)
        t = DemographicTable(CATEGORIES, probs)
        stochastic &= bool(np.all(np.abs(t.probs.sum(axis=1) - 1) <= 1e-12))
        for c in range(k):
            cat, p = argmax_demographic(t, c)
            g = CATEGORIES.index(cat)
            consistent &= p == t.probs[c].max() and g == int(np.argmax(t.probs[c]))
    ok = stochastic and consistent
    record_acceptance(10, ok, f"rows stochastic={stochastic}, argmax equals row max exactly={consistent} on 1000 tables")
    assert ok


def _tree_bytes(root: Path):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_11_determinism(tmp_path):
    def config(out):
        cfg = _reference_config(out)
        cfg.sample = {"fixture": "table2_dag", "n": 4000, "seed": 2}
        cfg.dag = None  # exercise structure learning as well
        cfg.targets = ("V", "D")
        return cfg

    trees = []
    for i in range(3):
        run_all(config(tmp_path / f"run{i}"))
        trees.append(_tree_bytes(tmp_path / f"run{i}"))
    files = sorted(trees[0])
    identical = all(t == trees[0] for t in trees[1:])
    expected = {"stage1/dag.json", "stage1/adjacency.csv", "stage1/cpds.json", "stage2/clusters.json",
                "stage2/labels.csv", "stage2/dunn_scan.csv", "stage3/model.json", "stage3/history.csv",
                "stage3/demographics.csv", "stage3/report.json"}
    ok = identical and expected <= set(files)
    record_acceptance(11, ok, f"{len(files)} artifacts byte-identical across 3 runs (two repeat checks): {identical}")
    assert ok
