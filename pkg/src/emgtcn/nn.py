"""Numerical pieces shared by the TCN and the MLP baseline."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class TrainingDivergedError(FloatingPointError):
    """Raised when the training loss stops being finite."""


@dataclass
class TrainConfig:
    epochs: int = 35
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "adam"  # "adam" | "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    final_column_only: bool = False
    precision: str = "float32"  # arithmetic dtype inside the training loop

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"unknown precision {self.precision!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def as_float(x) -> np.ndarray:
    """Array view keeping float32/float64 as is; anything else becomes float64."""
    a = np.asarray(x)
    return a if a.dtype.kind == "f" else a.astype(float)


def rng_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (initialization, shuffling) generators for one seed."""
    init_ss, shuffle_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_ss), np.random.default_rng(shuffle_ss)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def softmax(logits, axis: int = 0) -> np.ndarray:
    z = as_float(logits)
    z = z - z.max(axis=axis, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=axis, keepdims=True)


def relu(x):
    return np.maximum(x, 0.0)


def loss_weights(labels, mask=None) -> np.ndarray:
    """Normalized per-entry weights; negative labels are always masked out."""
    y = np.asarray(labels)
    w = (y >= 0).astype(float)
    if mask is not None:
        w = w * np.asarray(mask, dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError("loss mask selects no time-steps")
    return w / total


def cross_entropy(probs, labels, mask=None, class_axis: int = 0) -> float:
    """Weighted mean of ``-log p[label]`` over the masked entries."""
    p = np.moveaxis(np.asarray(probs, dtype=float), class_axis, -1)
    y = np.asarray(labels, dtype=np.int64)
    if p.shape[:-1] != y.shape:
        raise ValueError(f"labels shape {y.shape} does not match predictions {p.shape[:-1]}")
    w = loss_weights(y, mask)
    picked = np.take_along_axis(p, np.clip(y, 0, None)[..., None], axis=-1)[..., 0]
    with np.errstate(divide="ignore"):
        nll = -np.log(picked)
    return float(np.sum(np.where(w > 0, w * nll, 0.0)))


def nll_from_logits(logits, labels, weights, class_axis: int = 0) -> float:
    """Weighted cross-entropy via log-sum-exp; finite even when softmax underflows."""
    z = np.moveaxis(np.asarray(logits, dtype=np.float64), class_axis, -1)
    y = np.clip(np.asarray(labels, dtype=np.int64), 0, None)
    zmax = z.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z - zmax).sum(axis=-1)) + zmax[..., 0]
    picked = np.take_along_axis(z, y[..., None], axis=-1)[..., 0]
    w = np.asarray(weights)
    return float(np.sum(np.where(w > 0, w * (lse - picked), 0.0)))


def softmax_xent_grad(probs, labels, weights, class_axis: int = 0) -> np.ndarray:
    """Gradient of the weighted cross-entropy w.r.t. the logits."""
    p = np.moveaxis(as_float(probs), class_axis, -1)
    y = np.asarray(labels, dtype=np.int64)
    g = p.copy()
    idx = np.clip(y, 0, None)[..., None]
    np.put_along_axis(g, idx, np.take_along_axis(g, idx, axis=-1) - 1.0, axis=-1)
    g *= np.asarray(weights)[..., None]
    return np.moveaxis(g, -1, class_axis)


class Adam:
    def __init__(self, params: list[np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


class SGD:
    def __init__(self, params: list[np.ndarray], lr=1e-2):
        self.params = params
        self.lr = lr

    def step(self, grads: list[np.ndarray]) -> None:
        for p, g in zip(self.params, grads):
            p -= self.lr * g


def make_optimizer(params: list[np.ndarray], config: TrainConfig):
    if config.optimizer == "sgd":
        return SGD(params, config.learning_rate)
    return Adam(params, config.learning_rate, config.beta1, config.beta2, config.adam_eps)


def minibatches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for i in range(0, n, batch_size):
        yield order[i:i + batch_size]


def check_finite(value: float, epoch: int, lr: float) -> None:
    if not np.isfinite(value):
        raise TrainingDivergedError(
            f"loss became {value} in epoch {epoch + 1}; learning rate {lr:g} is likely too high")
