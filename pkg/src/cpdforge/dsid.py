"""Fully-connected ReLU network with a softmax head, trained with Adam on cross-entropy."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyInputError, NumericError, ParameterError

PROB_FLOOR = 1e-12

# default hidden widths; input and output widths come from the data
DEFAULT_HIDDEN = (128, 128, 64, 64, 32)


@dataclass(eq=False)
class MlpModel:
    """Weights ``W[i]`` have shape ``(dims[i+1], dims[i])`` (rows = outputs)."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ParameterError("need one weight matrix and bias per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ParameterError(f"layer {i} has shapes {w.shape}, {b.shape}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NumericError(f"non-finite parameters in layer {i}")
        self.layer_dims = dims

    @property
    def d_in(self) -> int:
        return self.layer_dims[0]

    @property
    def d_out(self) -> int:
        return self.layer_dims[-1]

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_dict(self) -> dict:
        return {
            "dims": list(self.layer_dims),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "MlpModel":
        return cls(
            tuple(obj["dims"]),
            [np.asarray(w, dtype=np.float64).reshape(o, i) for w, i, o in zip(obj["weights"], obj["dims"][:-1], obj["dims"][1:])],
            [np.asarray(b, dtype=np.float64) for b in obj["biases"]],
        )

    @classmethod
    def from_json(cls, text: str) -> "MlpModel":
        return cls.from_dict(json.loads(text))


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_model(layer_dims, seed: int = 0) -> MlpModel:
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or min(dims) < 1:
        raise ParameterError(f"need at least two positive layer widths, got {layer_dims}")
    rng = np.random.default_rng(seed)
    weights = [glorot_uniform(rng, a, b) for a, b in zip(dims[:-1], dims[1:])]
    biases = [np.zeros(b) for b in dims[1:]]
    return MlpModel(tuple(dims), weights, biases)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_input(model: MlpModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != model.d_in:
        raise DataError(f"input has {x2.shape[-1]} features, model expects {model.d_in}")
    return x2, single


def hidden_forward(weights, biases, x: np.ndarray) -> list[np.ndarray]:
    """Activations of every ReLU layer, input first."""
    acts = [x]
    for w, b in zip(weights, biases):
        acts.append(np.maximum(acts[-1] @ w.T + b, 0.0))
    return acts


def hidden_backward(weights, acts, grad_top: np.ndarray):
    """Back-propagate ``dL/d(last hidden activation)`` through the ReLU stack."""
    gw, gb = [None] * len(weights), [None] * len(weights)
    g = grad_top
    for i in range(len(weights) - 1, -1, -1):
        g = g * (acts[i + 1] > 0)
        gw[i] = g.T @ acts[i]
        gb[i] = g.sum(axis=0)
        g = g @ weights[i]
    return gw, gb


def forward(model: MlpModel, x) -> np.ndarray:
    """Class probabilities for one input vector or a batch of rows."""
    x2, single = _check_input(model, x)
    acts = hidden_forward(model.weights[:-1], model.biases[:-1], x2)
    probs = softmax(acts[-1] @ model.weights[-1].T + model.biases[-1])
    return probs[0] if single else probs


def _label_matrix(labels, k: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim == 2:
        if y.shape[1] != k:
            raise DataError(f"one-hot labels have {y.shape[1]} columns, expected {k}")
        return y.astype(np.float64)
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= k):
        raise DataError(f"class labels must lie in [0, {k})")
    out = np.zeros((y.shape[0], k))
    out[np.arange(y.shape[0]), y] = 1.0
    return out


def loss(batch_probs, batch_labels) -> float:
    """Mean categorical cross-entropy with predictions clamped to [1e-12, 1]."""
    p = np.atleast_2d(np.asarray(batch_probs, dtype=np.float64))
    y = _label_matrix(batch_labels, p.shape[1])
    if y.shape[0] != p.shape[0]:
        raise DataError(f"{p.shape[0]} predictions but {y.shape[0]} labels")
    if p.shape[0] == 0:
        raise EmptyInputError("empty batch")
    return float(-np.sum(y * np.log(np.clip(p, PROB_FLOOR, 1.0))) / p.shape[0])


def gradients(model: MlpModel, x, labels) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Batch loss and its gradients with respect to every weight and bias."""
    x2, _ = _check_input(model, x)
    y = _label_matrix(labels, model.d_out)
    acts = hidden_forward(model.weights[:-1], model.biases[:-1], x2)
    probs = softmax(acts[-1] @ model.weights[-1].T + model.biases[-1])
    n = x2.shape[0]
    # the clamp is inactive wherever y is nonzero and p > 1e-12
    dz = (probs * y.sum(axis=1, keepdims=True) - y) / n
    gw_out = dz.T @ acts[-1]
    gb_out = dz.sum(axis=0)
    gw, gb = hidden_backward(model.weights[:-1], acts, dz @ model.weights[-1])
    return loss(probs, y), gw + [gw_out], gb + [gb_out]


def predict_class(model: MlpModel, x) -> tuple[int, float] | tuple[np.ndarray, np.ndarray]:
    """Argmax class (lowest index on ties) and its probability."""
    p = forward(model, x)
    if p.ndim == 1:
        c = int(np.argmax(p))
        return c, float(p[c])
    c = np.argmax(p, axis=1)
    return c, p[np.arange(p.shape[0]), c]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 16
    batch_size: int = 50
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    early_stop_patience: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ParameterError("learning_rate must be >= 0")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ParameterError("Adam betas must lie in (0, 1)")
        if self.adam_eps <= 0:
            raise ParameterError("adam_eps must be positive")
        if self.early_stop_patience < 1:
            raise ParameterError("early_stop_patience must be >= 1")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "val_acc"])
        for e, row in enumerate(zip(self.train_loss, self.val_loss, self.val_accuracy), start=1):
            w.writerow([e, *map(repr, row)])
        return buf.getvalue()


class Adam:
    def __init__(self, params, config: TrainConfig):
        self.params = params
        self.cfg = config
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads) -> None:
        c = self.cfg
        self.t += 1
        corr1 = 1 - c.adam_beta1 ** self.t
        corr2 = 1 - c.adam_beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= c.adam_beta1
            m += (1 - c.adam_beta1) * g
            v *= c.adam_beta2
            v += (1 - c.adam_beta2) * g * g
            p -= c.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + c.adam_eps)


def accuracy(model: MlpModel, x, labels) -> float:
    pred, _ = predict_class(model, np.atleast_2d(x))
    return float(np.mean(pred == np.asarray(labels)))


def train(model: MlpModel, train_data, train_labels, val_data, val_labels, config: TrainConfig = TrainConfig()):
    """Mini-batch Adam with per-epoch shuffling and early stopping on validation loss.

    Returns a trained copy of ``model`` and its history. When validation loss
    fails to improve for ``early_stop_patience`` consecutive epochs, training
    stops and the parameters of the best epoch are restored; a run that uses
    every epoch keeps its final parameters.
    """
    x = np.asarray(train_data, dtype=np.float64)
    y = np.asarray(train_labels)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyInputError("training set is empty")
    if x.shape[0] != y.shape[0]:
        raise DataError("training data and labels differ in length")
    xv = np.asarray(val_data, dtype=np.float64)
    yv = np.asarray(val_labels)
    _check_input(model, x)
    _label_matrix(y, model.d_out)
    _label_matrix(yv, model.d_out)

    model = model.copy()
    params = model.params()
    opt = Adam(params, config)
    rng = np.random.default_rng(config.seed)
    hist = TrainHistory()
    best_loss, best_params, stale = np.inf, [p.copy() for p in params], 0
    has_val = xv.size > 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(x.shape[0])
        total = 0.0
        for start in range(0, x.shape[0], config.batch_size):
            idx = order[start:start + config.batch_size]
            batch_loss, gw, gb = gradients(model, x[idx], y[idx])
            total += batch_loss * len(idx)
            opt.step([g for pair in zip(gw, gb) for g in pair])
        hist.train_loss.append(total / x.shape[0])
        if has_val:
            probs = forward(model, xv)
            vl = loss(probs, yv)
            hist.val_loss.append(vl)
            hist.val_accuracy.append(float(np.mean(np.argmax(probs, axis=1) == _label_matrix(yv, model.d_out).argmax(axis=1))))
        else:
            vl = hist.train_loss[-1]
            hist.val_loss.append(float("nan"))
            hist.val_accuracy.append(float("nan"))
        if not np.isfinite(hist.train_loss[-1]):
            raise NumericError(f"training loss diverged at epoch {epoch}")
        hist.stopped_epoch = epoch
        if vl < best_loss:
            best_loss, stale = vl, 0
            best_params = [p.copy() for p in params]
            hist.best_epoch = epoch
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                for p, b in zip(params, best_params):
                    p[...] = b
                break
    return model, hist
