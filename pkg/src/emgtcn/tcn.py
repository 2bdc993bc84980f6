"""Single-layer temporal convolutional network with a time-distributed head.

A feature sequence ``X`` of shape ``(F, T)`` is passed through ``M`` causal
filters of ``d`` taps, a ReLU, and a softmax classifier applied to every time
column::

    E[m, t] = relu(b[m] + sum_{k, f} W[m, k, f] * X[f, t - d + 1 + k])
    y[:, t] = softmax(U @ E[:, t] + c)

Inputs before the start of the sequence are zeros, so ``E`` keeps all ``T``
columns and column ``t`` never depends on later inputs. Every function also
takes a batch of sequences ``(B, F, T)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import nn
from .nn import TrainConfig, TrainingDivergedError  # noqa: F401  (re-export)
from .signal_pipeline import build_sequences


@dataclass
class TcnParams:
    W: np.ndarray  # (M, d, F)
    b: np.ndarray  # (M,)
    U: np.ndarray  # (C, M)
    c: np.ndarray  # (C,)

    def __post_init__(self):
        M, d, F = self.W.shape
        if self.b.shape != (M,) or self.U.shape[1] != M or self.c.shape != (self.U.shape[0],):
            raise ValueError(
                f"inconsistent TCN shapes W{self.W.shape} b{self.b.shape} "
                f"U{self.U.shape} c{self.c.shape}")

    @property
    def hyper(self) -> dict:
        M, d, F = self.W.shape
        return {"M": M, "d": d, "F": F, "C": self.U.shape[0]}

    def arrays(self) -> list[np.ndarray]:
        return [self.W, self.b, self.U, self.c]

    def copy(self) -> "TcnParams":
        return TcnParams(*(a.copy() for a in self.arrays()))

    def astype(self, dtype) -> "TcnParams":
        return TcnParams(*(a.astype(dtype) for a in self.arrays()))

    @classmethod
    def init(cls, n_features=8, n_classes=27, n_filters=64, filter_len=25,
             rng: np.random.Generator | None = None) -> "TcnParams":
        rng = np.random.default_rng(0) if rng is None else rng
        M, d, F, C = n_filters, filter_len, n_features, n_classes
        W = nn.glorot_uniform(rng, (M, d, F), fan_in=d * F, fan_out=d * M)
        U = nn.glorot_uniform(rng, (C, M), fan_in=M, fan_out=C)
        return cls(W, np.zeros(M), U, np.zeros(C))


def _as_batch(X) -> tuple[np.ndarray, bool]:
    X = nn.as_float(X)
    if X.ndim == 2:
        return X[None], True
    if X.ndim != 3:
        raise ValueError(f"expected (F, T) or (B, F, T) input, got shape {X.shape}")
    return X, False


def _patches(params: TcnParams, X: np.ndarray) -> np.ndarray:
    """Causal im2col: ``(B*T, F*d)`` rows of the ``d`` most recent columns.

    Row entries are ordered feature-major (``f * d + k``), which keeps the copy
    contiguous; :func:`_flat_filters` orders the filter taps to match.
    """
    M, d, F = params.W.shape
    B, F_in, T = X.shape
    if F_in != F:
        raise ValueError(f"input has {F_in} features, filters expect {F}")
    if T < 1:
        raise ValueError("sequence length must be >= 1")
    Xp = np.concatenate([np.zeros((B, F, d - 1), dtype=X.dtype), X], axis=2)
    # [b, f, t, k] = Xp[b, f, t + k]  ->  [b, t, f, k]
    win = sliding_window_view(Xp, d, axis=2).transpose(0, 2, 1, 3)
    return win.reshape(B * T, F * d)


def _flat_filters(params: TcnParams) -> np.ndarray:
    M = params.W.shape[0]
    return params.W.transpose(0, 2, 1).reshape(M, -1)


def _preactivation(params: TcnParams, X: np.ndarray):
    """Pre-ReLU map in flat ``(B*T, M)`` layout, plus the patch matrix."""
    P = _patches(params, X)
    return P @ _flat_filters(params).T + params.b, P


def _unflatten(A: np.ndarray, B: int, T: int) -> np.ndarray:
    return A.reshape(B, T, -1).transpose(0, 2, 1)


def conv_forward(params: TcnParams, X) -> np.ndarray:
    """Temporal feature map ``E`` of shape ``(M, T)`` (or ``(B, M, T)``)."""
    Xb, single = _as_batch(X)
    B, _, T = Xb.shape
    E = _unflatten(nn.relu(_preactivation(params, Xb)[0]), B, T)
    return E[0] if single else E


def head_forward(params: TcnParams, E) -> np.ndarray:
    """Per-column class probabilities ``(C, T)`` (or ``(B, C, T)``)."""
    E = np.asarray(E, dtype=float)
    if E.shape[-2] != params.U.shape[1]:
        raise ValueError(f"feature map has {E.shape[-2]} rows, head expects {params.U.shape[1]}")
    logits = params.U @ E + params.c[:, None]
    return nn.softmax(logits, axis=-2)


def forward(params: TcnParams, X) -> tuple[np.ndarray, np.ndarray]:
    E = conv_forward(params, X)
    return E, head_forward(params, E)


def loss(y_hat, labels, mask=None) -> float:
    """Mean cross-entropy over the (masked) time-steps.

    ``y_hat`` is ``(C, T)`` or ``(B, C, T)``; labels are ``(T,)`` or ``(B, T)``.
    Negative labels mark padding and are always excluded.
    """
    y_hat = np.asarray(y_hat, dtype=float)
    return nn.cross_entropy(y_hat, labels, mask, class_axis=y_hat.ndim - 2)


def loss_and_grad(params: TcnParams, X, labels, mask=None) -> tuple[float, TcnParams]:
    Xb, single = _as_batch(X)
    y = np.asarray(labels, dtype=np.int64)
    if single:
        y = y[None]
        mask = None if mask is None else np.asarray(mask)[None]
    B, _, T = Xb.shape
    if y.shape != (B, T):
        raise ValueError(f"labels shape {y.shape} does not match (B, T) = {(B, T)}")
    M, d, F = params.W.shape

    Z, P = _preactivation(params, Xb)                   # (B*T, M)
    E = nn.relu(Z)
    logits = E @ params.U.T + params.c                 # (B*T, C)
    probs = nn.softmax(logits, axis=1)
    y_flat = y.reshape(-1)
    m_flat = None if mask is None else np.asarray(mask, dtype=float).reshape(-1)
    w = nn.loss_weights(y_flat, m_flat).astype(logits.dtype, copy=False)
    value = nn.nll_from_logits(logits, y_flat, w, class_axis=1)
    dlogits = nn.softmax_xent_grad(probs, y_flat, w, class_axis=1)
    dU = dlogits.T @ E
    dc = dlogits.sum(axis=0)
    dZ = (dlogits @ params.U) * (Z > 0)
    db = dZ.sum(axis=0)
    dW = (dZ.T @ P).reshape(M, F, d).transpose(0, 2, 1)
    return value, TcnParams(dW, db, dU, dc)


def backward(params: TcnParams, X, labels, mask=None) -> TcnParams:
    """Analytic gradients of :func:`loss` w.r.t. ``W, b, U, c``."""
    return loss_and_grad(params, X, labels, mask)[1]


def train(sequences, labels, config: TrainConfig | None = None, *, n_classes=27,
          n_filters=64, filter_len=25, init: TcnParams | None = None,
          history: list | None = None) -> TcnParams:
    """Mini-batch training on ``(N, F, T)`` sequences.

    ``labels`` is ``(N, T)`` with one class per column (negative = padding)
    or ``(N,)`` with the label of the final column only. Training is fully
    determined by ``config.seed``; arithmetic runs in ``config.precision``
    and the returned parameters are float64. Per-epoch mean losses are appended to
    ``history`` when given.
    """
    config = TrainConfig() if config is None else config
    dtype = np.dtype(config.precision)
    X = np.asarray(sequences, dtype=dtype)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 3 or len(X) == 0:
        raise ValueError("need a non-empty (N, F, T) array of sequences")
    N, F, T = X.shape
    if y.ndim == 1:
        y = np.concatenate([np.full((N, T - 1), -1, dtype=np.int64), y[:, None]], axis=1)
    if y.shape != (N, T):
        raise ValueError(f"labels shape {y.shape} does not match sequences {(N, T)}")
    mask = None
    if config.final_column_only:
        mask = np.zeros((N, T))
        mask[:, -1] = 1.0
        keep = y[:, -1] >= 0
        X, y, mask = X[keep], y[keep], mask[keep]
        N = len(X)

    init_rng, shuffle_rng = nn.rng_streams(config.seed)
    params = init if init is not None else TcnParams.init(
        F, n_classes, n_filters, filter_len, rng=init_rng)
    if config.epochs == 0:
        return params.astype(np.float64)
    params = params.astype(dtype)
    opt = nn.make_optimizer(params.arrays(), config)
    for epoch in range(config.epochs):
        total = 0.0
        for idx in nn.minibatches(N, config.batch_size, shuffle_rng):
            batch_mask = None if mask is None else mask[idx]
            if np.all(y[idx] < 0):
                continue
            value, grads = loss_and_grad(params, X[idx], y[idx], batch_mask)
            nn.check_finite(value, epoch, config.learning_rate)
            opt.step(grads.arrays())
            total += value * len(idx)
        if history is not None:
            history.append(total / N)
    return params.astype(np.float64)


def predict_proba_stream(params: TcnParams, features, T: int, chunk: int = 256) -> np.ndarray:
    """Class probabilities ``(n, C)`` at the final column of each step's sequence."""
    seqs = build_sequences(features, T)
    out = np.empty((len(seqs), params.U.shape[0]))
    for i in range(0, len(seqs), chunk):
        out[i:i + chunk] = forward(params, seqs[i:i + chunk])[1][:, :, -1]
    return out


def predict_stream(params: TcnParams, features, T: int, chunk: int = 256) -> np.ndarray:
    """Argmax class per feature time-step; ties go to the lowest index."""
    if len(features) == 0:
        return np.empty(0, dtype=np.int64)
    return np.argmax(predict_proba_stream(params, features, T, chunk), axis=1)
