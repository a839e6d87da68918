"""Classical comparators: logistic regression and a minimal 1D CNN.

Features are either basis-state probabilities |psi|^2 (dimension 2^N) or
the loop-gas angles theta (dimension = plaquette count), z-scored with
training-split statistics.  Both models train on BCE + lambda ||w||^2 / n
with hand-written exact gradients and Adam, so they are deterministic
under a fixed seed and can be finite-difference checked.
"""
import math
from dataclasses import dataclass

import numpy as np

AMPLITUDE_SQ = "amplitude_sq"
PLGC_THETA = "plgc_theta"


@dataclass
class FeatureMatrix:
    features: np.ndarray  # n_samples x n_features, already standardized
    kind: str
    mean: np.ndarray
    std: np.ndarray


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float


@dataclass
class Cnn1dModel:
    conv_w: np.ndarray   # (channels, kernel)
    conv_b: np.ndarray   # (channels,)
    dense_w: np.ndarray  # (channels,)
    dense_b: float


@dataclass
class BaselineConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    l2_strength: float = 1e-4
    seed: int = 0


def raw_features(samples, kind: str) -> np.ndarray:
    if kind == AMPLITUDE_SQ:
        rows = []
        for s in samples:
            if s.state is None:
                raise ValueError("sample has no state vector for amplitude features")
            rows.append(np.abs(s.state.amplitudes) ** 2)
        return np.stack(rows)
    if kind == PLGC_THETA:
        for s in samples:
            if s.thetas is None:
                raise ValueError("sample has no loop-gas angles")
        return np.stack([np.asarray(s.thetas, dtype=float) for s in samples])
    raise ValueError(f"unknown feature kind {kind!r}")


def extract_features(samples, kind: str, stats=None) -> FeatureMatrix:
    """Standardized feature matrix; pass training-set stats for a test split.

    Zero-variance features pass through unscaled.
    """
    raw = raw_features(samples, kind)
    if stats is None:
        mean = raw.mean(axis=0)
        std = raw.std(axis=0)
    else:
        mean, std = stats
    safe = np.where(std > 0, std, 1.0)
    feats = np.where(std > 0, (raw - mean) / safe, raw)
    return FeatureMatrix(feats, kind, mean, std)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


_CLIP = 1e-12


def _bce_and_dlogit(logits, y01, n):
    p = np.clip(_sigmoid(logits), _CLIP, 1.0 - _CLIP)
    loss = -float(np.mean(y01 * np.log(p) + (1 - y01) * np.log(1 - p)))
    dlogit = (p - y01) / n
    return loss, dlogit


class _Adam:
    def __init__(self, shapes, lr):
        self.lr = lr
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2, eps = 0.9, 0.999, 1e-8
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            mh = self.m[i] / (1 - b1**self.t)
            vh = self.v[i] / (1 - b2**self.t)
            out.append(p - self.lr * mh / (np.sqrt(vh) + eps))
        return out


def logreg_loss_grad(w, b, X, y01, l2):
    n = X.shape[0]
    logits = X @ w + b
    loss, dlogit = _bce_and_dlogit(logits, y01, n)
    loss += l2 * float(w @ w) / n
    gw = X.T @ dlogit + 2 * l2 * w / n
    gb = float(dlogit.sum())
    return loss, gw, gb


def train_logreg(features: FeatureMatrix, labels, config: BaselineConfig) -> LogRegModel:
    X = features.features
    y01 = _to01(labels)
    if len(set(y01.tolist())) < 2:
        raise ValueError("training set has a single class")
    rng = np.random.default_rng(config.seed)
    w = rng.normal(0.0, 0.01, size=X.shape[1])
    b = 0.0
    opt = _Adam([w.shape, ()], config.learning_rate)
    for _ in range(config.epochs):
        _, gw, gb = logreg_loss_grad(w, b, X, y01, config.l2_strength)
        w, b = opt.step([w, np.asarray(b)], [gw, np.asarray(gb)])
        b = float(b)
    return LogRegModel(weights=w, bias=b)


def cnn1d_forward(model: Cnn1dModel, X: np.ndarray):
    """Logits plus the intermediates needed for the backward pass."""
    n, d = X.shape
    channels, kernel = model.conv_w.shape
    if d < kernel:
        raise ValueError(f"feature dimension {d} shorter than kernel {kernel}")
    windows = np.lib.stride_tricks.sliding_window_view(X, kernel, axis=1)
    pre = np.einsum("npk,ck->ncp", windows, model.conv_w) + model.conv_b[None, :, None]
    act = np.maximum(pre, 0.0)
    pooled = act.mean(axis=2)
    logits = pooled @ model.dense_w + model.dense_b
    return logits, (windows, pre, pooled)


def cnn1d_loss_grad(model: Cnn1dModel, X, y01, l2):
    n = X.shape[0]
    logits, (windows, pre, pooled) = cnn1d_forward(model, X)
    loss, dlogit = _bce_and_dlogit(logits, y01, n)
    flat = np.concatenate([model.conv_w.ravel(), model.conv_b,
                           model.dense_w, [model.dense_b]])
    loss += l2 * float(flat @ flat) / n
    g_dense_w = pooled.T @ dlogit + 2 * l2 * model.dense_w / n
    g_dense_b = float(dlogit.sum()) + 2 * l2 * model.dense_b / n
    d_pool = np.outer(dlogit, model.dense_w)          # (n, channels)
    d_act = d_pool[:, :, None] / pre.shape[2]         # mean pool
    d_pre = d_act * (pre > 0)
    g_conv_w = np.einsum("ncp,npk->ck", d_pre, windows) + 2 * l2 * model.conv_w / n
    g_conv_b = d_pre.sum(axis=(0, 2)) + 2 * l2 * model.conv_b / n
    return loss, (g_conv_w, g_conv_b, g_dense_w, g_dense_b)


def train_cnn1d(features: FeatureMatrix, labels, config: BaselineConfig,
                channels: int = 8, kernel: int = 3) -> Cnn1dModel:
    X = features.features
    if X.shape[1] < kernel:
        raise ValueError(f"feature dimension {X.shape[1]} shorter than kernel {kernel}")
    y01 = _to01(labels)
    rng = np.random.default_rng(config.seed)
    model = Cnn1dModel(
        conv_w=rng.normal(0.0, 0.1, size=(channels, kernel)),
        conv_b=np.zeros(channels),
        dense_w=rng.normal(0.0, 0.1, size=channels),
        dense_b=0.0,
    )
    opt = _Adam([model.conv_w.shape, model.conv_b.shape,
                 model.dense_w.shape, ()], config.learning_rate)
    for _ in range(config.epochs):
        _, grads = cnn1d_loss_grad(model, X, y01, config.l2_strength)
        cw, cb, dw, db = opt.step(
            [model.conv_w, model.conv_b, model.dense_w, np.asarray(model.dense_b)],
            [grads[0], grads[1], grads[2], np.asarray(grads[3])],
        )
        model = Cnn1dModel(cw, cb, dw, float(db))
    return model


def predict_labels(model, features: FeatureMatrix) -> np.ndarray:
    """{-1, +1} labels; the logit-0 boundary maps to -1."""
    X = features.features
    if isinstance(model, LogRegModel):
        if X.shape[1] != model.weights.shape[0]:
            raise ValueError("feature dimension mismatch")
        logits = X @ model.weights + model.bias
    elif isinstance(model, Cnn1dModel):
        logits, _ = cnn1d_forward(model, X)
    else:
        raise TypeError(f"unknown model type {type(model)!r}")
    return np.where(_sigmoid(logits) > 0.5, 1, -1)


def _to01(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if set(np.unique(labels).tolist()) <= {-1, 1}:
        return (labels > 0).astype(float)
    if set(np.unique(labels).tolist()) <= {0, 1}:
        return labels.astype(float)
    raise ValueError("labels must be in {-1,+1} or {0,1}")
