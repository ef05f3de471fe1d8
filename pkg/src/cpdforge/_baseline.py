"""Two-head multi-output classifier used as the comparison baseline.

Shared ReLU hidden layers feed one softmax head per target (age group and
gender); the reported accuracy is the mean of the per-head accuracies.
"""
from dataclasses import dataclass

import numpy as np

from .dsid import Adam, TrainConfig, glorot_uniform, hidden_backward, hidden_forward, softmax
from .errors import EmptyInputError


@dataclass
class TwoHeadModel:
    weights: list
    biases: list
    heads: list  # [(W, b), ...]

    def params(self):
        out = [p for pair in zip(self.weights, self.biases) for p in pair]
        return out + [p for head in self.heads for p in head]

    def predict_proba(self, x):
        acts = hidden_forward(self.weights, self.biases, np.asarray(x, dtype=np.float64))
        return [softmax(acts[-1] @ w.T + b) for w, b in self.heads]


def init_two_head(d_in, hidden, head_dims, seed=0):
    rng = np.random.default_rng(seed)
    dims = [d_in, *hidden]
    weights = [glorot_uniform(rng, a, b) for a, b in zip(dims[:-1], dims[1:])]
    biases = [np.zeros(b) for b in dims[1:]]
    heads = [(glorot_uniform(rng, dims[-1], k), np.zeros(k)) for k in head_dims]
    return TwoHeadModel(weights, biases, heads)


def _grads(model, x, targets):
    acts = hidden_forward(model.weights, model.biases, x)
    n = x.shape[0]
    total, head_grads, top = 0.0, [], np.zeros_like(acts[-1])
    for (w, b), y in zip(model.heads, targets):
        p = softmax(acts[-1] @ w.T + b)
        total += -np.mean(np.log(np.clip(p[np.arange(n), y], 1e-12, 1.0)))
        dz = p.copy()
        dz[np.arange(n), y] -= 1.0
        dz /= n
        head_grads += [dz.T @ acts[-1], dz.sum(axis=0)]
        top += dz @ w
    gw, gb = hidden_backward(model.weights, acts, top)
    return total, [g for pair in zip(gw, gb) for g in pair] + head_grads


def accuracy(model, x, targets):
    probs = model.predict_proba(x)
    return float(np.mean([np.mean(p.argmax(axis=1) == y) for p, y in zip(probs, targets)]))


def train_two_head(model, x, targets, xv, targets_v, config: TrainConfig):
    """Adam on the summed per-head cross-entropy; returns per-epoch averaged validation accuracy."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise EmptyInputError("training set is empty")
    targets = [np.asarray(t) for t in targets]
    params = model.params()
    opt = Adam(params, config)
    rng = np.random.default_rng(config.seed)
    val_acc = []
    for _ in range(config.epochs):
        order = rng.permutation(x.shape[0])
        for start in range(0, x.shape[0], config.batch_size):
            idx = order[start:start + config.batch_size]
            _, grads = _grads(model, x[idx], [t[idx] for t in targets])
            opt.step(grads)
        val_acc.append(accuracy(model, xv, targets_v))
    return model, val_acc
