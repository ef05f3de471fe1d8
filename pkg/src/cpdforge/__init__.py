"""Discrete Bayesian networks, DAG-guided clustering and a symptom classifier on numpy."""
from .clustering import ClusterModel, KSelection, dunn_index, kmeans, kmeanspp_init, lloyd, select_k
from .cpd import (
    BayesNet,
    Cpd,
    SeverityReport,
    all_assignments,
    cpd_lookup,
    fit_bayesian,
    fit_mle,
    joint_probability,
    severity_report,
)
from .dag import Dag, load_dag
from .data import CategoricalTable, FeatureMatrix, SplitSpec, decode, encode, load_csv, split
from .demographic import (
    CATEGORIES,
    DemographicTable,
    argmax_demographic,
    fit_demographic_table,
    load_reference_demographics,
    zero_support_categories,
)
from .dsid import MlpModel, TrainConfig, TrainHistory, forward, gradients, init_model, predict_class, train
from .errors import *  # noqa: F401,F403
from .pipeline import PipelineConfig, run_all, run_stage1, run_stage2, run_stage3
from .sampling import SampleConfig, chain3, collider3, forward_sample, make_fixture, mixture, table2_dag, reference_net
from .structure import ScoredDag, SearchConfig, exhaustive_search, hill_climb, local_score, total_score

__version__ = "0.1.0"
