"""Three-stage pipeline: structure + CPDs, DAG-guided clustering, DSID training.

Artifacts are written under ``out``::

    data.csv                    (only when the config asks for a synthetic sample)
    stage1/dag.json, adjacency.csv, cpds.json, reports/<node>.csv
    stage2/features.json, clusters.json, labels.csv, dunn_scan.csv
    stage3/model.json, history.csv, demographics.csv, demographics.json, report.json
"""
from __future__ import annotations

import copy
import csv
import json
import logging
from dataclasses import dataclass, field, fields
from itertools import product
from pathlib import Path

import numpy as np

from . import _baseline
from .clustering import ClusterModel, kmeans, select_k
from .cpd import BayesNet, fit_bayesian, fit_mle, severity_report
from .dag import Dag, load_dag
from .data import CategoricalTable, SplitSpec, encode, load_csv, split_indices
from .demographic import DemographicTable, argmax_demographic, fit_demographic_table
from .dsid import DEFAULT_HIDDEN, MlpModel, TrainConfig, init_model, predict_class, train
from .errors import CpdforgeError, DataError, ParameterError
from .sampling import SampleConfig, forward_sample, make_fixture, table2_dag
from .structure import SearchConfig, hill_climb

log = logging.getLogger(__name__)


class ConfigError(CpdforgeError, ValueError):
    pass


def _sub(cls, obj, seed):
    obj = dict(obj or {})
    names = {f.name for f in fields(cls)}
    unknown = set(obj) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    if "seed" in names:
        obj.setdefault("seed", seed)
    try:
        return cls(**obj)
    except (TypeError, ParameterError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from None


@dataclass
class PipelineConfig:
    out: str = "artifacts"
    input: str | None = None
    sample: dict | None = None
    dag: str | None = None
    targets: tuple[str, ...] = ("V", "D")
    severity_nodes: tuple[str, ...] = ()
    search: dict = field(default_factory=dict)
    estimator: str = "bayesian"
    ess: float = 1.0
    clustering: dict = field(default_factory=dict)
    features: str | list = "ancestors"
    encoding: str = "one_hot"
    train: dict = field(default_factory=dict)
    hidden: tuple[int, ...] = DEFAULT_HIDDEN
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    heuristic_baseline: bool = False
    seed: int = 0

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**copy.deepcopy(obj))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(obj)

    def validate(self) -> None:
        if self.estimator not in ("mle", "bayesian"):
            raise ConfigError(f"estimator must be 'mle' or 'bayesian', got {self.estimator!r}")
        if self.estimator == "bayesian" and not self.ess > 0:
            raise ConfigError("ess must be positive")
        self.targets = tuple(self.targets)
        self.severity_nodes = tuple(self.severity_nodes)
        self.hidden = tuple(int(h) for h in self.hidden)
        self.search_config()
        self.train_config()
        self.split_spec()
        unknown = set(self.clustering) - {"k", "k_min", "k_max", "seed", "n_init", "max_iter"}
        if unknown:
            raise ConfigError(f"unknown clustering keys: {sorted(unknown)}")

    def search_config(self) -> SearchConfig:
        return _sub(SearchConfig, self.search, self.seed)

    def train_config(self) -> TrainConfig:
        return _sub(TrainConfig, self.train, self.seed)

    def split_spec(self) -> SplitSpec:
        try:
            return SplitSpec(tuple(self.split), self.seed)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _dump(path: Path, obj) -> None:
    _write(path, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_dataset(config: PipelineConfig) -> CategoricalTable:
    """The configured input table, sampling a fixture into ``out/data.csv`` if requested."""
    if config.input is not None:
        return load_csv(config.input)
    if config.sample is None:
        raise ConfigError("config needs either 'input' or 'sample'")
    path = config.out_dir / "data.csv"
    spec = dict(config.sample)
    kind = spec.pop("fixture", "table2_dag")
    n = int(spec.pop("n", 1000))
    seed = int(spec.pop("seed", config.seed))
    if kind == "mixture_k":
        table, _ = make_fixture(kind, seed=seed, **spec)
    else:
        if spec:
            raise ConfigError(f"unknown sample keys: {sorted(spec)}")
        table = forward_sample(make_fixture(kind), SampleConfig(n, seed))
    _write(path, table.to_csv())
    return load_csv(path)


def _resolve_dag(config: PipelineConfig, table: CategoricalTable) -> Dag | None:
    if config.dag is None:
        return None
    dag = table2_dag() if config.dag == "table2_dag" else load_dag(config.dag)
    if tuple(dag.node_names) != table.variables:
        # same node set in a different column order is fine; re-index to the table
        if set(dag.node_names) != set(table.variables):
            raise DataError(f"DAG nodes {dag.node_names} do not match data columns {table.variables}")
        pos = {n: table.variables.index(n) for n in dag.node_names}
        dag = Dag(table.variables, frozenset((pos[dag.node_names[i]], pos[dag.node_names[j]]) for i, j in dag.edges))
    return dag


def learn_structure(config: PipelineConfig, table: CategoricalTable) -> Dag:
    dag = _resolve_dag(config, table)
    stage = config.out_dir / "stage1"
    if dag is None:
        if table.n_vars < 2:
            dag = Dag.empty(table.variables)
            scored = {"score": None, "iterations": 0}
        else:
            result = hill_climb(table, config.search_config())
            dag = result.dag
            scored = {"score": result.score, "iterations": result.iterations_used}
        _dump(stage / "search.json", scored)
    _write(stage / "dag.json", json.dumps(dag.to_dict(), indent=1) + "\n")
    _write(stage / "adjacency.csv", dag.to_adjacency_csv())
    return dag


def fit_cpds(config: PipelineConfig, table: CategoricalTable, dag: Dag) -> BayesNet:
    net = fit_mle(table, dag) if config.estimator == "mle" else fit_bayesian(table, dag, config.ess)
    _write(config.out_dir / "stage1" / "cpds.json", json.dumps(net.to_dict()) + "\n")
    return net


def write_severity_reports(config: PipelineConfig, net: BayesNet, nodes=None) -> list[Path]:
    nodes = config.severity_nodes if nodes is None else nodes
    paths = []
    for node in nodes:
        rep = severity_report(net, node)
        path = config.out_dir / "stage1" / "reports" / f"{rep.target}.csv"
        _write(path, rep.to_csv())
        paths.append(path)
    return paths


def run_stage1(config: PipelineConfig, table: CategoricalTable | None = None) -> tuple[Dag, BayesNet]:
    table = load_dataset(config) if table is None else table
    dag = learn_structure(config, table)
    net = fit_cpds(config, table, dag)
    write_severity_reports(config, net)
    return dag, net


def feature_variables(config: PipelineConfig, table: CategoricalTable, dag: Dag) -> list[str]:
    if isinstance(config.features, (list, tuple)):
        names = list(config.features)
    elif config.features == "ancestors":
        targets = [dag.index(t) for t in config.targets]
        names = dag.names(dag.ancestors(targets))
        if not names:
            raise DataError(
                f"targets {list(config.targets)} have no ancestors in the DAG; "
                "set 'features' to an explicit list of variables"
            )
    elif config.features == "all":
        names = [v for v in table.variables if v not in config.targets]
    else:
        raise ConfigError(f"features must be 'ancestors', 'all' or a list, got {config.features!r}")
    for n in names:
        table.index(n)
    return names


def _encoded(table: CategoricalTable, names, encoding):
    return encode(table.select(names), encoding)


def run_stage2(config: PipelineConfig, dag: Dag, table: CategoricalTable | None = None) -> tuple[ClusterModel, np.ndarray]:
    table = load_dataset(config) if table is None else table
    names = feature_variables(config, table, dag)
    fm = _encoded(table, names, config.encoding)
    cl = config.clustering
    seed = int(cl.get("seed", config.seed))
    stage = config.out_dir / "stage2"
    _dump(stage / "features.json", {
        "variables": names,
        "states": [list(table.states[table.index(n)]) for n in names],
        "encoding": config.encoding,
        "column_map": [list(c) for c in fm.column_map],
    })
    max_iter = int(cl.get("max_iter", 300))
    if cl.get("k") is not None:
        model = kmeans(fm.data, int(cl["k"]), seed=seed, max_iter=max_iter)
    else:
        sel = select_k(fm.data, int(cl.get("k_min", 2)), int(cl.get("k_max", 10)), seed=seed,
                       n_init=int(cl.get("n_init", 3)), max_iter=max_iter)
        _write(stage / "dunn_scan.csv", sel.to_csv())
        model = sel.model_for(sel.chosen_k)
    _dump(stage / "clusters.json", {**model.to_dict(), "converged": model.converged})
    _write(stage / "labels.csv", model.assignments_csv())
    return model, np.asarray(model.assignments)


def read_labels(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return np.array([int(r[0]) for r in rows[1:]], dtype=np.int64)


def _demographic_categories(table: CategoricalTable, targets):
    return tuple(product(*(table.states[table.index(t)] for t in targets)))


def run_stage3(config: PipelineConfig, labels, table: CategoricalTable | None = None,
               dag: Dag | None = None) -> tuple[MlpModel, DemographicTable, dict]:
    table = load_dataset(config) if table is None else table
    stage = config.out_dir / "stage3"
    feats_path = config.out_dir / "stage2" / "features.json"
    if feats_path.exists():
        with open(feats_path, encoding="utf-8") as fh:
            names = json.load(fh)["variables"]
    else:
        if dag is None:
            raise DataError("stage 3 needs stage-2 features.json or a DAG")
        names = feature_variables(config, table, dag)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != table.n_rows:
        raise DataError(f"{labels.shape[0]} labels for {table.n_rows} rows")
    k = int(labels.max()) + 1
    x = _encoded(table, names, config.encoding).data
    tr, va, te = split_indices(table.n_rows, config.split_spec())
    tcfg = config.train_config()
    model = init_model((x.shape[1], *config.hidden, k), seed=tcfg.seed)
    model, hist = train(model, x[tr], labels[tr], x[va], labels[va], tcfg)

    cats = _demographic_categories(table, config.targets)
    demo_rows = list(zip(*(table.labels(t) for t in config.targets)))
    demo = fit_demographic_table(labels, demo_rows, k, cats)

    pred, score = predict_class(model, x[te])
    report = {
        "k": k,
        "input_dim": int(x.shape[1]),
        "features": names,
        "n_train": int(len(tr)), "n_val": int(len(va)), "n_test": int(len(te)),
        "test_accuracy": float(np.mean(pred == labels[te])),
        "prediction_score": {"min": float(score.min()), "max": float(score.max()), "mean": float(score.mean())},
        "stopped_epoch": hist.stopped_epoch,
        "best_epoch": hist.best_epoch,
    }
    if config.heuristic_baseline:
        report["baseline"] = run_baseline(config, table, x, tr, va, te)
    _write(stage / "model.json", json.dumps({**model.to_dict(), "features": names, "encoding": config.encoding,
                                              "states": [list(table.states[table.index(n)]) for n in names]}) + "\n")
    _write(stage / "history.csv", hist.to_csv())
    _write(stage / "demographics.csv", demo.to_csv())
    _write(stage / "demographics.json", json.dumps({**demo.to_dict(), "targets": list(config.targets)}) + "\n")
    _dump(stage / "report.json", report)
    return model, demo, report


def run_baseline(config: PipelineConfig, table: CategoricalTable, x, tr, va, te) -> dict:
    """Two-head classifier predicting each demographic target directly."""
    tcfg = config.train_config()
    targets = [np.asarray(table.column(t)) for t in config.targets]
    heads = [len(table.states[table.index(t)]) for t in config.targets]
    model = _baseline.init_two_head(x.shape[1], config.hidden, heads, seed=tcfg.seed)
    model, val_acc = _baseline.train_two_head(
        model, x[tr], [t[tr] for t in targets], x[va], [t[va] for t in targets], tcfg
    )
    probs = model.predict_proba(x[te])
    per_head = [float(np.mean(p.argmax(axis=1) == t[te])) for p, t in zip(probs, targets)]
    scores = np.concatenate([p.max(axis=1) for p in probs])
    return {
        "test_accuracy": float(np.mean(per_head)),
        "per_target_accuracy": dict(zip(config.targets, per_head)),
        "val_accuracy": val_acc,
        "prediction_score": {"min": float(scores.min()), "max": float(scores.max()), "mean": float(scores.mean())},
    }


def run_all(config: PipelineConfig) -> dict:
    table = load_dataset(config)
    dag, net = run_stage1(config, table)
    _, labels = run_stage2(config, dag, table)
    _, _, report = run_stage3(config, labels, table, dag)
    return report


def encode_records(records: list[dict], meta: dict) -> np.ndarray:
    """Encode raw label records with the state spaces stored at training time."""
    names, states = meta["features"], meta["states"]
    rows = []
    for i, rec in enumerate(records):
        try:
            rows.append([states[j].index(rec[n]) for j, n in enumerate(names)])
        except KeyError as exc:
            raise DataError(f"record {i} lacks feature {exc.args[0]!r}") from None
        except ValueError:
            bad = next(n for j, n in enumerate(names) if rec[n] not in states[j])
            raise DataError(f"record {i}: unknown state {rec[bad]!r} for {bad!r}") from None
    table = CategoricalTable(tuple(names), tuple(tuple(s) for s in states), np.array(rows, dtype=np.int64).reshape(-1, len(names)))
    return encode(table, meta.get("encoding", "one_hot")).data


def predict_records(out_dir, records: list[dict]) -> list[dict]:
    """Predicted class, its score and the most probable demographic category per record."""
    out_dir = Path(out_dir)
    with open(out_dir / "stage3" / "model.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(out_dir / "stage3" / "demographics.json", encoding="utf-8") as fh:
        demo_meta = json.load(fh)
    model = MlpModel.from_dict(meta)
    demo = DemographicTable.from_dict(demo_meta)
    x = encode_records(records, meta)
    cls, score = predict_class(model, x)
    out = []
    for c, s in zip(np.atleast_1d(cls), np.atleast_1d(score)):
        cat, p = argmax_demographic(demo, int(c))
        out.append({"class": int(c), "score": float(s),
                    **dict(zip(demo_meta.get("targets", []), cat)), "probability": p})
    return out
