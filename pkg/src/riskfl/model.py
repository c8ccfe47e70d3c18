"""Softmax regression and a one-hidden-layer tanh MLP on a flat parameter vector.

Parameter layout (row-major, concatenated):

* linear: ``W (C, p)``, ``b (C,)``
* mlp:    ``W1 (h, p)``, ``b1 (h,)``, ``W2 (C, h)``, ``b2 (C,)``

so class ``c``'s output weights form a contiguous block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigError, ContractError, NumericError


@dataclass(frozen=True)
class Layout:
    arch: str  # "linear" or "mlp"
    p: int
    n_classes: int
    hidden: int = 0

    def __post_init__(self):
        if self.arch not in ("linear", "mlp"):
            raise ConfigError(f"unknown architecture {self.arch!r}")
        if self.arch == "mlp" and self.hidden < 1:
            raise ConfigError("mlp layout needs hidden >= 1")

    @property
    def dim(self) -> int:
        p, c, h = self.p, self.n_classes, self.hidden
        if self.arch == "linear":
            return p * c + c
        return p * h + h + h * c + c

    def unpack(self, w: np.ndarray) -> tuple[np.ndarray, ...]:
        p, c, h = self.p, self.n_classes, self.hidden
        if self.arch == "linear":
            return w[: c * p].reshape(c, p), w[c * p :]
        o = 0
        w1 = w[o : o + h * p].reshape(h, p)
        o += h * p
        b1 = w[o : o + h]
        o += h
        w2 = w[o : o + c * h].reshape(c, h)
        o += c * h
        return w1, b1, w2, w[o:]


@dataclass(frozen=True)
class ModelParams:
    w: np.ndarray = field(repr=False)
    layout: Layout

    def __post_init__(self):
        if self.w.shape != (self.layout.dim,):
            raise ContractError(
                f"weight vector has shape {self.w.shape}, layout needs ({self.layout.dim},)"
            )


def init_params(layout: Layout, seed: int = 0) -> ModelParams:
    """Zeros for the linear model; Glorot-uniform weights and zero biases for the MLP."""
    if layout.arch == "linear":
        return ModelParams(np.zeros(layout.dim), layout)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) % (1 << 64)))
    p, c, h = layout.p, layout.n_classes, layout.hidden
    a1 = np.sqrt(6.0 / (p + h))
    a2 = np.sqrt(6.0 / (h + c))
    w = np.concatenate(
        [
            rng.uniform(-a1, a1, h * p),
            np.zeros(h),
            rng.uniform(-a2, a2, c * h),
            np.zeros(c),
        ]
    )
    return ModelParams(w, layout)


def _forward(params: ModelParams, x: np.ndarray):
    lay = params.layout
    if lay.arch == "linear":
        wc, b = lay.unpack(params.w)
        return x @ wc.T + b, None
    w1, b1, w2, b2 = lay.unpack(params.w)
    hidden = np.tanh(x @ w1.T + b1)
    return hidden @ w2.T + b2, hidden


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_finite(params: ModelParams) -> None:
    if not np.all(np.isfinite(params.w)):
        raise NumericError("model weights contain non-finite entries")


def predict_proba(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one row (shape ``(p,)``) or a batch (``(B, p)``)."""
    _check_finite(params)
    logits, _ = _forward(params, np.asarray(x, dtype=np.float64))
    return _softmax(logits)


def loss(params: ModelParams, x: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy of the batch."""
    _check_finite(params)
    logits, _ = _forward(params, x)
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(log_norm - z[np.arange(len(y)), y]))


def grad(params: ModelParams, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic gradient of :func:`loss`, in the layout of ``params.w``."""
    _check_finite(params)
    lay = params.layout
    logits, hidden = _forward(params, x)
    delta = _softmax(logits)
    delta[np.arange(len(y)), y] -= 1.0
    delta /= len(y)
    if lay.arch == "linear":
        return np.concatenate([(delta.T @ x).ravel(), delta.sum(axis=0)])
    _, _, w2, _ = lay.unpack(params.w)
    g_w2 = delta.T @ hidden
    g_b2 = delta.sum(axis=0)
    d_hidden = (delta @ w2) * (1.0 - hidden**2)
    g_w1 = d_hidden.T @ x
    g_b1 = d_hidden.sum(axis=0)
    return np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])


def sgd_step(params: ModelParams, g: np.ndarray, eta: float) -> ModelParams:
    if g.shape != params.w.shape:
        raise ContractError(f"gradient shape {g.shape} does not match weights {params.w.shape}")
    return ModelParams(params.w - eta * g, params.layout)


def local_train(
    params: ModelParams,
    train_indices: np.ndarray,
    ds: Dataset,
    epochs: int,
    batch_size: int,
    eta: float,
    rng: np.random.Generator,
) -> tuple[ModelParams, np.ndarray]:
    """Mini-batch SGD over the device's shuffled training split.

    Returns the trained parameters and the gradient-equivalent update
    ``(w - w_local) / eta`` that the device would upload.
    """
    if len(train_indices) == 0:
        raise ConfigError("local training split is empty")
    if epochs < 1 or batch_size < 1:
        raise ConfigError("epochs and batch_size must be >= 1")
    if eta == 0:
        return params, np.zeros_like(params.w)
    current = params
    for _ in range(epochs):
        order = train_indices[rng.permutation(len(train_indices))]
        for start in range(0, len(order), batch_size):
            # sorted so a full batch reproduces the plain full-batch gradient bitwise
            batch = np.sort(order[start : start + batch_size])
            g = grad(current, ds.features[batch], ds.labels[batch])
            current = sgd_step(current, g, eta)
    return current, (params.w - current.w) / eta


def accuracy(params: ModelParams, indices: np.ndarray, ds: Dataset) -> float:
    """Fraction of argmax-correct predictions; ties go to the lowest class index."""
    if len(indices) == 0:
        raise ContractError("accuracy needs a non-empty index set")
    _check_finite(params)
    logits, _ = _forward(params, ds.features[indices])
    return float(np.mean(np.argmax(logits, axis=1) == ds.labels[indices]))
