"""Forward sampling from a BayesNet and the canned ground-truth fixtures."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .cpd import BayesNet, Cpd
from .dag import Dag
from .data import CategoricalTable
from .errors import ParameterError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser (Steele, Lea & Flood 2014)."""
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_uniforms(seed: int, records: np.ndarray, stream: int) -> np.ndarray:
    """Uniform doubles in [0, 1) keyed by (seed, record index, stream).

    Each value is a pure function of its key, so records can be generated in
    any order or in parallel and still reproduce bit for bit. The key is
    folded through two SplitMix64 rounds and the top 53 bits become the
    mantissa.
    """
    with np.errstate(over="ignore"):
        key = _mix64(np.uint64(seed) * _GOLDEN + np.uint64(stream) + np.uint64(1))
        z = _mix64(key + (records.astype(np.uint64) + np.uint64(1)) * _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class SampleConfig:
    n_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ParameterError("n_samples must be >= 1")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")


def forward_sample(net: BayesNet, config: SampleConfig) -> CategoricalTable:
    """Ancestral sampling in topological order by inverse-CDF lookup."""
    n = config.n_samples
    cards = net.cardinalities
    out = np.zeros((n, net.dag.n_nodes), dtype=np.int64)
    records = np.arange(n, dtype=np.uint64)
    for v in net.dag.topological_order():
        cpd = net.cpds[v]
        cfg = np.zeros(n, dtype=np.int64)
        for p in cpd.parents:
            cfg = cfg * cards[p] + out[:, p]
        cum = np.cumsum(cpd.table, axis=1)
        cum /= cum[:, -1:]
        u = counter_uniforms(config.seed, records, v)
        thresholds = cum[cfg]
        state = (u[:, None] >= thresholds).sum(axis=1)
        out[:, v] = np.minimum(state, cards[v] - 1)
    return CategoricalTable(net.names, net.states, out)


def _binary_net(names, edges, tables) -> BayesNet:
    dag = Dag(tuple(names), frozenset(edges))
    cpds = []
    for v in range(len(names)):
        parents = dag.parents(v)
        cpds.append(Cpd(v, parents, (2,) * len(parents), np.asarray(tables[names[v]], dtype=float)))
    return BayesNet(dag, tuple(("No", "Yes") for _ in names), tuple(cpds))


def chain3(strength: float = 0.8) -> BayesNet:
    """A -> B -> C with P(child=Yes | parent=Yes) = strength, = 1 - strength otherwise."""
    s = float(strength)
    flip = [[s, 1 - s], [1 - s, s]]
    return _binary_net("ABC", [(0, 1), (1, 2)], {"A": [[0.5, 0.5]], "B": flip, "C": flip})


def collider3(strength: float = 0.8) -> BayesNet:
    """A <- C -> B; the common-cause example with nodes ordered A, B, C."""
    s = float(strength)
    flip = [[s, 1 - s], [1 - s, s]]
    return _binary_net("ABC", [(2, 0), (2, 1)], {"A": flip, "B": flip, "C": [[0.5, 0.5]]})


def _fixture_text(name: str) -> str:
    return resources.files("cpdforge").joinpath("fixtures").joinpath(name).read_text(encoding="utf-8")


def table2_dag() -> Dag:
    """The 24-node reference DAG over features A..X."""
    return Dag.from_adjacency_csv(_fixture_text("reference_dag.csv"))


def feature_descriptions() -> dict[str, dict[str, str]]:
    return json.loads(_fixture_text("features.json"))


def reference_net() -> BayesNet:
    """Reference DAG with synthetic CPDs; ICU (N) and ventilation (O) use the reference severity tables."""
    return BayesNet.from_json(_fixture_text("reference_net.json"))


REFERENCE_CPDS = {"icu": "severity_icu.json", "ventilation": "severity_ventilation.json"}


def reference_cpd(name: str) -> BayesNet:
    """A reference severity CPD as a small net whose parents are uniform roots.

    ``"icu"`` gives N | B, C, M and ``"ventilation"`` gives O | C, M, N, S.
    """
    if name not in REFERENCE_CPDS:
        raise ParameterError(f"unknown reference CPD {name!r}; expected one of {sorted(REFERENCE_CPDS)}")
    obj = json.loads(_fixture_text(REFERENCE_CPDS[name]))
    names = [*obj["parents"], obj["variable"]]
    child = len(names) - 1
    cpds = [{"variable": p, "parents": [], "parent_cards": [], "table": [[1.0 / c] * c]}
            for p, c in zip(obj["parents"], obj["parent_cards"])]
    cpds.append({"variable": obj["variable"], "parents": obj["parents"],
                 "parent_cards": obj["parent_cards"], "table": obj["table"]})
    states = [["No", "Yes"]] * child + [obj["states"]]
    return BayesNet.from_dict({"names": names, "states": states,
                               "edges": [[i, child] for i in range(child)], "cpds": cpds})


def mixture(
    k: int = 3,
    n_per_cluster: int = 60,
    block: int = 6,
    max_flips: int = 1,
    seed: int = 0,
) -> tuple[CategoricalTable, np.ndarray]:
    """Labelled categorical mixture on the corners of a binary hypercube.

    Cluster ``c`` has prototype bits set on block ``c`` of ``k * block`` yes/no
    variables, so prototypes sit ``2 * block`` flips apart. Each record is its
    prototype with between 0 and ``max_flips`` random bits flipped. With
    ``2 * max_flips < block`` the planted clusters are well separated.
    """
    if k < 1 or n_per_cluster < 1 or block < 1 or max_flips < 0:
        raise ParameterError("invalid mixture parameters")
    rng = np.random.default_rng(seed)
    d = k * block
    rows, labels = [], []
    for c in range(k):
        proto = np.zeros(d, dtype=np.int64)
        proto[c * block:(c + 1) * block] = 1
        for _ in range(n_per_cluster):
            x = proto.copy()
            flips = rng.choice(d, size=rng.integers(0, max_flips + 1), replace=False)
            x[flips] ^= 1
            rows.append(x)
            labels.append(c)
    order = rng.permutation(len(rows))
    data = np.array(rows)[order]
    names = tuple(f"S{j:02d}" for j in range(d))
    table = CategoricalTable(names, tuple(("No", "Yes") for _ in names), data)
    return table, np.array(labels)[order]


FIXTURES = ("chain3", "collider3", "table2_dag", "mixture_k")


def make_fixture(kind: str, **kwargs):
    """Canned ground truth: a BayesNet, or ``(table, labels)`` for ``mixture_k``."""
    if kind == "chain3":
        return chain3(**kwargs)
    if kind == "collider3":
        return collider3(**kwargs)
    if kind == "table2_dag":
        return reference_net()
    if kind == "mixture_k":
        return mixture(**kwargs)
    raise ParameterError(f"unknown fixture {kind!r}; expected one of {FIXTURES}")
