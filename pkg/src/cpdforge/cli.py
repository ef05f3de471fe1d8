"""Command-line entry point. Each subcommand runs one pipeline step over an artifact directory.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .cpd import BayesNet
from .dag import load_dag
from .errors import DataError, GraphError, NumericError, ParameterError
from .pipeline import (
    ConfigError,
    PipelineConfig,
    _write,
    fit_cpds,
    learn_structure,
    load_dataset,
    predict_records,
    read_labels,
    run_all,
    run_stage2,
    run_stage3,
    write_severity_reports,
)
from .sampling import FIXTURES, SampleConfig, forward_sample, make_fixture

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON pipeline config; flags override its keys")
    p.add_argument("--input", help="categorical CSV with a header row")
    p.add_argument("--out", help="artifact directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--targets", type=_csv_list, help="comma-separated demographic variables")
    p.add_argument("--score", choices=("bic", "bdeu"))
    p.add_argument("--ess", type=float, help="equivalent sample size for BDeu and the Bayesian estimator")
    p.add_argument("--k", type=int, help="fixed number of clusters")
    p.add_argument("--dag", help="'table2_dag' (the bundled fixture) or a DAG file (.json or adjacency .csv)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpdforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("learn-structure", "learn (or load) the DAG into stage1/"),
        ("fit-cpds", "estimate CPDs for the stage-1 DAG"),
        ("report-severity", "write severity tables for chosen nodes"),
        ("select-k", "scan K by Dunn index and cluster at the best K"),
        ("cluster", "cluster ancestor features (fixed --k or a Dunn scan)"),
        ("train-dsid", "train the identification model on stage-2 labels"),
        ("predict", "predict class and top demographic for query records"),
        ("run-all", "run all three stages"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "report-severity":
            p.add_argument("--nodes", type=_csv_list, help="comma-separated severity nodes")
        if name == "select-k":
            p.add_argument("--k-min", type=int)
            p.add_argument("--k-max", type=int)
        if name == "fit-cpds":
            p.add_argument("--estimator", choices=("mle", "bayesian"))
        if name == "run-all":
            p.add_argument("--baseline", action="store_true", help="also train the two-head baseline")
    p = sub.add_parser("sample", help="write a synthetic table drawn from a fixture")
    p.add_argument("--fixture", choices=FIXTURES, default="table2_dag")
    p.add_argument("--n", type=int, default=1000, help="rows (per cluster for mixture_k)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=3, help="planted clusters for mixture_k")
    p.add_argument("--out", required=True, help="output CSV path")
    return parser


def config_from_args(args) -> PipelineConfig:
    obj = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    if args.input is not None:
        obj["input"] = args.input
        obj.pop("sample", None)
    for key in ("out", "seed", "targets", "ess", "dag"):
        if getattr(args, key) is not None:
            obj[key] = getattr(args, key)
    if args.score is not None:
        obj.setdefault("search", {})["score"] = args.score
    if args.ess is not None and obj.get("search", {}).get("score") == "bdeu":
        obj["search"]["ess"] = args.ess
    clustering = obj.setdefault("clustering", {})
    if args.k is not None:
        clustering["k"] = args.k
    for key in ("k_min", "k_max"):
        if getattr(args, key, None) is not None:
            clustering[key] = getattr(args, key)
    if getattr(args, "estimator", None):
        obj["estimator"] = args.estimator
    if getattr(args, "nodes", None):
        obj["severity_nodes"] = args.nodes
    if getattr(args, "baseline", False):
        obj["heuristic_baseline"] = True
    return PipelineConfig.from_dict(obj)


def _stage1_dag(cfg: PipelineConfig):
    path = cfg.out_dir / "stage1" / "dag.json"
    if not path.exists():
        raise DataError(f"{path} not found; run learn-structure first")
    return load_dag(path)


def _command(args) -> None:
    if args.command == "sample":
        fx = make_fixture(args.fixture, **({"k": args.k, "n_per_cluster": args.n, "seed": args.seed}
                                           if args.fixture == "mixture_k" else {}))
        out = Path(args.out)
        if args.fixture == "mixture_k":
            table, labels = fx
            _write(out.with_name(out.stem + "_labels.csv"), "cluster\n" + "".join(f"{v}\n" for v in labels.tolist()))
        else:
            table = forward_sample(fx, SampleConfig(args.n, args.seed))
        _write(out, table.to_csv())
        return
    cfg = config_from_args(args)
    if args.command == "learn-structure":
        learn_structure(cfg, load_dataset(cfg))
    elif args.command == "fit-cpds":
        fit_cpds(cfg, load_dataset(cfg), _stage1_dag(cfg))
    elif args.command == "report-severity":
        path = cfg.out_dir / "stage1" / "cpds.json"
        net = BayesNet.from_json(path.read_text(encoding="utf-8"))
        for p in write_severity_reports(cfg, net):
            print(p)
    elif args.command == "select-k":
        cfg.clustering.pop("k", None)
        model, _ = run_stage2(cfg, _stage1_dag(cfg))
        print(model.k)
    elif args.command == "cluster":
        model, _ = run_stage2(cfg, _stage1_dag(cfg))
        print(model.k)
    elif args.command == "train-dsid":
        labels = read_labels(cfg.out_dir / "stage2" / "labels.csv")
        _, _, report = run_stage3(cfg, labels)
        print(json.dumps({"test_accuracy": report["test_accuracy"], **report["prediction_score"]}))
    elif args.command == "predict":
        with open(cfg.input, encoding="utf-8", newline="") as fh:
            records = list(csv.DictReader(fh))
        rows = predict_records(cfg.out_dir, records)
        if rows:
            w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    elif args.command == "run-all":
        report = run_all(cfg)
        print(json.dumps({"k": report["k"], "test_accuracy": report["test_accuracy"]}))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _command(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, GraphError, OSError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
