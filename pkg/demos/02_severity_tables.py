"""Estimate severity CPDs and print them as two-decimal tables.

The bundled 24-node network is sampled, CPDs are re-estimated from the sample
with the Bayesian estimator, and the ICU table is printed next to the
reference values that generated the data.
"""
from cpdforge import SampleConfig, cpd_lookup, fit_bayesian, forward_sample, reference_net, severity_report

truth = reference_net()
data = forward_sample(truth, SampleConfig(n_samples=100_000, seed=3))
fitted = fit_bayesian(data, truth.dag, ess=1.0)

report = severity_report(fitted, "N")
print("Estimated ICU admission table (rows: N, columns: parent configurations)\n")
print(report.to_csv())

query = {"B": "Yes", "C": "Yes", "M": "Yes"}
print("P(N=Yes | B, C, M all Yes)")
print(f"  reference : {cpd_lookup(truth, 'N', query)[1]:.2f}")
print(f"  estimated : {cpd_lookup(fitted, 'N', query)[1]:.2f}")

vent = {"C": "Yes", "M": "Yes", "N": "Yes", "S": "Yes"}
print("P(O=Yes | C, M, N, S all Yes)")
print(f"  reference : {cpd_lookup(truth, 'O', vent)[1]:.2f}")
print(f"  estimated : {cpd_lookup(fitted, 'O', vent)[1]:.2f}")
