"""Per-vertex dimensional-error regressor.

A fully-connected 10 -> 128 -> 128 -> 64 -> 1 network, ReLU at every layer
including the output (targets are non-negative distances). Implemented
directly on numpy in float64 so training is deterministic for a fixed seed
and the analytic gradients can be checked against finite differences.

Inputs are z-score normalized with statistics stored in the model file;
feature scales span several orders of magnitude, predictions stay in mm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError
from .features import FEATURE_NAMES, extract_features

LAYER_SIZES = (10, 128, 128, 64, 1)
MODEL_FORMAT = "amprint-errornet"
MODEL_VERSION = 1


@dataclass
class TrainingSample:
    features: np.ndarray
    target: float

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1)
        if self.features.shape != (LAYER_SIZES[0],):
            raise TrainingError(f"expected {LAYER_SIZES[0]} features")
        if self.target < 0:
            raise TrainingError("target error must be >= 0 mm")


@dataclass
class ErrorNet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    feat_mean: np.ndarray
    feat_std: np.ndarray
    seed: int
    epochs: int
    optimizer: dict = field(default_factory=dict)

    def normalize(self, rows: np.ndarray) -> np.ndarray:
        return (rows - self.feat_mean) / self.feat_std


@dataclass
class TrainingHistory:
    train_mse: list[float]
    val_mse: list[float]
    best_epoch: int


def _init_params(seed):
    """Fan-in scaled uniform weights, small positive biases (live ReLUs)."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(LAYER_SIZES[:-1], LAYER_SIZES[1:]):
        lim = np.sqrt(1.0 / fan_in)
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.full(fan_out, 0.1))
    return weights, biases


def _forward(x, weights, biases):
    activations = [x]
    for w, b in zip(weights, biases):
        x = np.maximum(x @ w + b, 0.0)
        activations.append(x)
    return activations


def mse_and_gradients(weights, biases, x, y):
    """MSE loss and its analytic gradients for a normalized batch."""
    acts = _forward(x, weights, biases)
    pred = acts[-1][:, 0]
    diff = pred - y
    loss = float(np.mean(diff**2))
    grad = (2.0 * diff / len(y))[:, None]
    g_w = [None] * len(weights)
    g_b = [None] * len(biases)
    for i in range(len(weights) - 1, -1, -1):
        gz = grad * (acts[i + 1] > 0.0)
        g_w[i] = acts[i].T @ gz
        g_b[i] = gz.sum(axis=0)
        grad = gz @ weights[i].T
    return loss, g_w, g_b


def _as_arrays(samples):
    if isinstance(samples, tuple) and len(samples) == 2:
        x, y = samples
        return (
            np.asarray(x, dtype=np.float64).reshape(-1, LAYER_SIZES[0]),
            np.asarray(y, dtype=np.float64).reshape(-1),
        )
    x = np.array([s.features for s in samples], dtype=np.float64)
    y = np.array([s.target for s in samples], dtype=np.float64)
    return x, y


def train(samples, epochs: int = 50, split: float = 0.2, seed: int = 0,
          lr: float = 1e-3, batch_size: int = 256):
    """Train a fresh regressor; returns (ErrorNet, TrainingHistory).

    Deterministic for a fixed seed. The 1-split fraction of rows trains, the
    rest validates; the weights of the best-validation epoch are kept.
    Raises TrainingError on NaN loss or an empty split.
    """
    x, y = _as_arrays(samples)
    if len(x) < 2:
        raise TrainingError("need at least 2 samples")
    if not 0.0 < split < 1.0:
        raise TrainingError("split must be in (0, 1)")
    if np.any(y < 0):
        raise TrainingError("targets must be >= 0 mm")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise TrainingError("non-finite training data")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(x))
    n_val = int(round(split * len(x)))
    if n_val == 0 or n_val == len(x):
        raise TrainingError(f"split {split} leaves an empty train or validation set")
    val_idx, train_idx = order[:n_val], order[n_val:]

    mean = x[train_idx].mean(axis=0)
    std = x[train_idx].std(axis=0)
    constant = std == 0.0
    if constant.any():
        import logging

        logging.getLogger(__name__).warning(
            "feature(s) %s constant in training data; std forced to 1",
            [FEATURE_NAMES[i] for i in np.nonzero(constant)[0]],
        )
        std = std.copy()
        std[constant] = 1.0

    xt = (x[train_idx] - mean) / std
    yt = y[train_idx]
    xv = (x[val_idx] - mean) / std
    yv = y[val_idx]

    weights, biases = _init_params(seed)
    params = weights + biases
    adam_m = [np.zeros_like(p) for p in params]
    adam_v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps_adam = 0.9, 0.999, 1e-8
    step = 0

    history = TrainingHistory([], [], 0)
    best_val = np.inf
    best_params = None
    for epoch in range(epochs):
        idx = rng.permutation(len(xt))
        for lo in range(0, len(xt), batch_size):
            sel = idx[lo:lo + batch_size]
            loss, g_w, g_b = mse_and_gradients(weights, biases, xt[sel], yt[sel])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"loss diverged (non-finite) at epoch {epoch}, step {step}"
                )
            step += 1
            for p, g, m, v in zip(params, g_w + g_b, adam_m, adam_v):
                m *= beta1
                m += (1 - beta1) * g
                v *= beta2
                v += (1 - beta2) * g * g
                m_hat = m / (1 - beta1**step)
                v_hat = v / (1 - beta2**step)
                p -= lr * m_hat / (np.sqrt(v_hat) + eps_adam)
        train_mse = float(np.mean((_forward(xt, weights, biases)[-1][:, 0] - yt) ** 2))
        val_mse = float(np.mean((_forward(xv, weights, biases)[-1][:, 0] - yv) ** 2))
        history.train_mse.append(train_mse)
        history.val_mse.append(val_mse)
        if val_mse < best_val:
            best_val = val_mse
            history.best_epoch = epoch
            best_params = ([w.copy() for w in weights], [b.copy() for b in biases])

    if best_params is not None:
        weights, biases = best_params
    net = ErrorNet(
        weights, biases, mean, std, seed=seed, epochs=epochs,
        optimizer={"kind": "adam", "lr": lr, "batch_size": batch_size},
    )
    return net, history


def predict(net: ErrorNet, rows) -> np.ndarray:
    """Non-negative per-row error prediction in mm."""
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != LAYER_SIZES[0]:
        raise TrainingError(f"expected {LAYER_SIZES[0]} feature columns")
    if not np.all(np.isfinite(x)):
        raise TrainingError("non-finite feature rows")
    out = _forward(net.normalize(x), net.weights, net.biases)[-1][:, 0]
    return out


def part_epsilon(net: ErrorNet, mesh, vertex_subset) -> float:
    """Mean predicted error over a characteristic's vertices (the epsilon term)."""
    idx = np.asarray(list(vertex_subset), dtype=np.int64)
    if len(idx) == 0:
        raise TrainingError("vertex subset is empty")
    rows = extract_features(mesh)[idx]
    return float(predict(net, rows).mean())


def permutation_importance(net: ErrorNet, samples, repeats: int = 30, seed: int = 0):
    """Permutation feature importance.

    For each feature column: shuffle it ``repeats`` times, record the MSE
    increase against the intact rows, and report mean(delta)/std(delta).
    A zero std (feature completely ignored) reports +-inf and is flagged.
    Returns (scores, flags) of length 10.
    """
    x, y = _as_arrays(samples)
    if len(x) < repeats:
        raise TrainingError(f"need at least {repeats} samples")
    rng = np.random.default_rng(seed)
    base_mse = float(np.mean((predict(net, x) - y) ** 2))
    scores = np.zeros(x.shape[1])
    flags = np.zeros(x.shape[1], dtype=bool)
    for f in range(x.shape[1]):
        deltas = np.empty(repeats)
        for r in range(repeats):
            shuffled = x.copy()
            shuffled[:, f] = shuffled[rng.permutation(len(x)), f]
            mse = float(np.mean((predict(net, shuffled) - y) ** 2))
            deltas[r] = mse - base_mse
        std = deltas.std(ddof=0)
        if std == 0.0:
            scores[f] = np.inf if deltas.mean() >= 0 else -np.inf
            flags[f] = True
        else:
            scores[f] = deltas.mean() / std
    return scores, flags


def pearson_correlation(predicted, actual) -> float:
    """Linear correlation between predicted and actual errors (reported only)."""
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.std() == 0.0 or a.std() == 0.0:
        return float("nan")
    return float(np.corrcoef(p, a)[0, 1])


def save_model(net: ErrorNet, path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layer_sizes": list(LAYER_SIZES),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "feat_mean": net.feat_mean.tolist(),
        "feat_std": net.feat_std.tolist(),
        "seed": net.seed,
        "epochs": net.epochs,
        "optimizer": net.optimizer,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> ErrorNet:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise TrainingError(f"{path}: not an {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise TrainingError(f"{path}: unsupported model version {doc.get('version')}")
    if tuple(doc["layer_sizes"]) != LAYER_SIZES:
        raise TrainingError(f"{path}: unexpected layer sizes {doc['layer_sizes']}")
    return ErrorNet(
        [np.asarray(w) for w in doc["weights"]],
        [np.asarray(b) for b in doc["biases"]],
        np.asarray(doc["feat_mean"]),
        np.asarray(doc["feat_std"]),
        seed=doc["seed"],
        epochs=doc["epochs"],
        optimizer=doc.get("optimizer", {}),
    )
