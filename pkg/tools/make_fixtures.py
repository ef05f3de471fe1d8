"""Regenerate the static fixture files under src/cpdforge/fixtures/.

The adjacency matrix, the ICU / mechanical-ventilation CPDs and the
per-class demographic table are transcribed literally. Every other CPD of the
24-node network is synthetic: a softmax over random per-parent-state weights
drawn from a fixed seed, frozen to JSON so sampling never depends on the
numpy version that built it.
"""
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "cpdforge" / "fixtures"

LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWX"

ADJACENCY = """\
A 000000000000000000000000
B 000000010000110101100100
C 010000000000111000100000
D 000011101010000110010001
E 100001001100000010001011
F 000000001100000000001001
G 000000000000000000000000
H 100111000001000110000010
I 000000000100000000001000
J 000000000000000000000000
K 000000000000000000000000
L 100111101100000010001011
M 000100110001011101101110
N 000000000000001000100100
O 000000100000000000000000
P 000000000000000000011010
Q 100001001100000000001011
R 100010010001000110000110
S 000110011000001001000010
T 000000000010000000000000
U 000000000000000000010000
V 000110000011000000010001
W 100001000100000000000000
X 100000000100000000001000
"""

FEATURES = {
    "A": ("abdominal pain", "symptom"),
    "B": ("abnormal chest X-ray", "symptom"),
    "C": ("acute respiratory distress syndrome", "symptom"),
    "D": ("age group", "demographic"),
    "E": ("chills", "symptom"),
    "F": ("cough", "symptom"),
    "G": ("death", "severity"),
    "H": ("diarrhea", "symptom"),
    "I": ("fever", "symptom"),
    "J": ("subjective fever", "symptom"),
    "K": ("health care worker", "profile"),
    "L": ("headache", "symptom"),
    "M": ("hospitalized", "severity"),
    "N": ("intensive care unit (ICU)", "severity"),
    "O": ("mechanical ventilation", "severity"),
    "P": ("medical condition", "severity"),
    "Q": ("muscle aches (myalgia)", "symptom"),
    "R": ("nausea or vomiting", "symptom"),
    "S": ("pneumonia", "symptom"),
    "T": ("race", "demographic"),
    "U": ("runny nose", "symptom"),
    "V": ("gender", "demographic"),
    "W": ("shortness of breath", "symptom"),
    "X": ("sore throat", "symptom"),
}

AGE_GROUPS = [
    "0 - 9 Years", "10 - 19 Years", "20 - 29 Years", "30 - 39 Years", "40 - 49 Years",
    "50 - 59 Years", "60 - 69 Years", "70 - 79 Years", "80+ Years",
]
GENDERS = ["Female", "Male"]
RACES = sorted([
    "American Indian/Alaska Native", "Asian", "Black", "Multiple/Other",
    "Native Hawaiian/Other Pacific Islander", "White",
])

# P(N | B, C, M), columns in B, C, M mixed-radix order; rows No, Yes
ICU = [[1.0, 0.91, 0.95, 0.61, 0.99, 0.8, 0.82, 0.46],
       [0.0, 0.09, 0.05, 0.39, 0.01, 0.2, 0.18, 0.54]]
# P(O | C, M, N, S)
VENTILATION = [[1.0, 1.0, 0.86, 0.67, 0.99, 0.99, 0.85, 0.76, 0.97, 0.93, 0.5, 0.71, 0.94, 0.96, 0.57, 0.37],
               [0.0, 0.0, 0.14, 0.33, 0.01, 0.01, 0.15, 0.24, 0.03, 0.07, 0.5, 0.29, 0.06, 0.04, 0.43, 0.63]]

DEMOGRAPHICS = """\
Female 0 - 9 Years|0 0.03 0.01 0 0.03 0 0.01 0 0.03 0.02 0 0 0 0|0 0 0.01 0 0 0 0 0 0 0 0 0 0
Female 10 - 19 Years|0.04 0.06 0.07 0.03 0.02 0 0.07 0.01 0.05 0.04 0 0.02 0 0.01|0 0 0 0.04 0.03 0.02 0.01 0 0 0.02 0.01 0.02 0
Female 20 - 29 Years|0.16 0.11 0.16 0.12 0.07 0.01 0.18 0.03 0.13 0.09 0.02 0.05 0.05 0.02|0 0.02 0.03 0.08 0.07 0.05 0.07 0 0.03 0.08 0.04 0.03 0.01
Female 30 - 39 Years|0.12 0.07 0.1 0.1 0.06 0.01 0.12 0.06 0.08 0.07 0.06 0.03 0.09 0.03|0.02 0.04 0.04 0.08 0.09 0.08 0.09 0.02 0.04 0.08 0.09 0.08 0.02
Female 40 - 49 Years|0.13 0.06 0.09 0.11 0.06 0.04 0.11 0.06 0.07 0.08 0.08 0.04 0.13 0.02|0.03 0.05 0.04 0.06 0.08 0.12 0.09 0.05 0.04 0.07 0.08 0.07 0.05
Female 50 - 59 Years|0.13 0.07 0.09 0.11 0.08 0.07 0.11 0.11 0.08 0.11 0.1 0.05 0.16 0.06|0.05 0.1 0.1 0.12 0.16 0.15 0.13 0.05 0.09 0.06 0.13 0.11 0.09
Female 60 - 69 Years|0.08 0.05 0.05 0.07 0.07 0.08 0.06 0.11 0.07 0.09 0.12 0.12 0.16 0.12|0.09 0.12 0.09 0.09 0.1 0.13 0.11 0.14 0.18 0.08 0.12 0.12 0.2
Female 70 - 79 Years|0.04 0.04 0.02 0.04 0.06 0.11 0.03 0.06 0.05 0.07 0.06 0.06 0.05 0.09|0.13 0.13 0.1 0.04 0.1 0.05 0.07 0.15 0.05 0.05 0.03 0.07 0.06
Female 80+ Years|0.01 0.03 0 0.01 0.03 0.1 0 0.04 0.03 0.02 0.03 0.07 0.01 0.07|0.1 0.05 0.07 0.02 0.01 0.02 0.02 0.06 0.07 0.07 0.03 0.02 0.03
Male 0 - 9 Years|0 0.04 0.01 0.01 0.03 0 0.01 0 0.05 0.03 0 0.01 0 0|0 0 0.01 0 0 0 0 0 0 0 0 0 0
Male 10 - 19 Years|0.03 0.08 0.07 0.03 0.03 0 0.06 0 0.06 0.04 0 0.01 0.01 0.01|0 0 0.01 0.01 0.01 0.01 0.01 0 0 0.03 0.02 0 0
Male 20 - 29 Years|0.06 0.07 0.08 0.07 0.06 0.01 0.06 0.03 0.05 0.05 0.02 0.01 0.02 0.02|0.01 0.02 0.02 0.04 0.03 0.03 0.01 0 0.03 0.03 0.02 0.02 0.01
Male 30 - 39 Years|0.05 0.06 0.07 0.08 0.07 0.03 0.05 0.04 0.04 0.05 0.06 0.03 0.04 0.04|0.01 0.04 0.04 0.06 0.05 0.05 0.03 0.04 0.01 0.06 0.07 0.07 0.03
Male 40 - 49 Years|0.05 0.05 0.06 0.07 0.07 0.05 0.04 0.08 0.04 0.06 0.1 0.05 0.07 0.03|0.04 0.07 0.04 0.07 0.06 0.08 0.06 0.05 0.03 0.04 0.06 0.05 0.07
Male 50 - 59 Years|0.05 0.05 0.05 0.06 0.07 0.07 0.04 0.11 0.05 0.04 0.11 0.06 0.08 0.14|0.09 0.05 0.07 0.07 0.06 0.08 0.06 0.06 0.09 0.07 0.07 0.1 0.1
Male 60 - 69 Years|0.05 0.07 0.05 0.06 0.09 0.14 0.04 0.16 0.06 0.06 0.13 0.13 0.08 0.11|0.13 0.13 0.12 0.12 0.09 0.09 0.13 0.14 0.08 0.05 0.13 0.12 0.12
Male 70 - 79 Years|0.01 0.04 0.02 0.02 0.07 0.15 0.01 0.05 0.04 0.05 0.08 0.16 0.03 0.17|0.14 0.11 0.11 0.06 0.02 0.03 0.06 0.16 0.13 0.11 0.08 0.11 0.16
Male 80+ Years|0 0.02 0 0.01 0.03 0.13 0 0.05 0.02 0.02 0.03 0.11 0.01 0.07|0.15 0.07 0.1 0.03 0.02 0.01 0.04 0.09 0.12 0.1 0.01 0.02 0.05
"""


def adjacency():
    names, rows = [], []
    for line in ADJACENCY.splitlines():
        name, bits = line.split()
        names.append(name)
        rows.append([int(b) for b in bits])
    return names, np.array(rows)


def states_for(letter):
    if letter == "D":
        return AGE_GROUPS
    if letter == "V":
        return GENDERS
    if letter == "T":
        return RACES
    return ["No", "Yes"]


def synthetic_cpd(rng, card, parent_cards):
    q = int(np.prod(parent_cards, dtype=int))
    bias = rng.normal(0.0, 1.0, size=card)
    weights = [rng.normal(0.0, 1.3, size=(pc, card)) for pc in parent_cards]
    logits = np.tile(bias, (q, 1))
    for i in range(q):
        rem, idx = i, []
        for pc in reversed(parent_cards):
            rem, s = divmod(rem, pc)
            idx.append(s)
        for w, s in zip(weights, reversed(idx)):
            logits[i] += w[s]
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    return p / p.sum(axis=1, keepdims=True)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    names, mat = adjacency()
    assert names == list(LETTERS) and mat.sum() == 109
    with open(OUT / "reference_dag.csv", "w") as fh:
        fh.write(",".join(["Features", *names]) + "\n")
        for n, row in zip(names, mat):
            fh.write(",".join([n, *map(str, row)]) + "\n")

    with open(OUT / "features.json", "w") as fh:
        json.dump({k: {"feature": f, "type": t} for k, (f, t) in FEATURES.items()}, fh, indent=1)

    states = [states_for(n) for n in names]
    rng = np.random.default_rng(20240601)
    cpds = []
    for v, name in enumerate(names):
        parents = [p for p in range(24) if mat[p, v]]
        pcards = [len(states[p]) for p in parents]
        if name == "N":
            table = np.array(ICU).T
        elif name == "O":
            table = np.array(VENTILATION).T
        else:
            table = synthetic_cpd(rng, len(states[v]), pcards)
        cpds.append({
            "variable": name,
            "parents": [names[p] for p in parents],
            "parent_cards": pcards,
            "table": table.tolist(),
        })
    edges = [[int(i), int(j)] for i, j in np.argwhere(mat == 1)]
    with open(OUT / "reference_net.json", "w") as fh:
        json.dump({"names": names, "states": states, "edges": edges, "cpds": cpds}, fh)

    for fname, var, parents, table in (
        ("severity_icu.json", "N", ["B", "C", "M"], ICU),
        ("severity_ventilation.json", "O", ["C", "M", "N", "S"], VENTILATION),
    ):
        with open(OUT / fname, "w") as fh:
            json.dump({"variable": var, "parents": parents, "parent_cards": [2] * len(parents),
                       "states": ["No", "Yes"], "table": np.array(table).T.tolist()}, fh, indent=1)

    lines = DEMOGRAPHICS.splitlines()
    with open(OUT / "reference_demographics.csv", "w") as fh:
        fh.write(",".join(["category", *(f"C{i}" for i in range(27))]) + "\n")
        for line in lines:
            label, left, right = line.split("|")
            vals = left.split() + right.split()
            assert len(vals) == 27, label
            fh.write(",".join([label, *vals]) + "\n")


if __name__ == "__main__":
    main()
