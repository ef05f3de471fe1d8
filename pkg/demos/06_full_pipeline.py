"""Run the whole pipeline end to end and compare against a direct classifier.

The bundled DAG decides which variables feed the clustering step, and the
classifier then learns those clusters from the same inputs. A two-head network
that predicts gender and age directly serves as the baseline.
"""
import json
import sys
import tempfile
from pathlib import Path

from cpdforge import PipelineConfig, run_all

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="cpdforge-"))
config = PipelineConfig.from_dict({
    "out": str(out),
    "sample": {"fixture": "table2_dag", "n": 20_000, "seed": 1},
    "dag": "table2_dag",
    "targets": ["V", "D"],
    "severity_nodes": ["G", "N", "O", "P"],
    "clustering": {"k_min": 2, "k_max": 10},
    "heuristic_baseline": True,
})
report = run_all(config)
print(json.dumps({k: report[k] for k in ("k", "input_dim", "features", "test_accuracy", "prediction_score")}, indent=1))
print(f"baseline averaged accuracy: {report['baseline']['test_accuracy']:.4f}")
print(f"\nartifacts in {out}:")
for p in sorted(out.rglob("*")):
    if p.is_file():
        print("  ", p.relative_to(out))
