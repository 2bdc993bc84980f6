"""Sliding-window framing and time-domain EMG features.

Signals are ``(n_samples, n_channels)`` arrays. The single-feature functions
operate along the last axis, so they accept one window ``(W,)`` or a stack of
windows ``(..., W)`` alike.

TD5 vectors are laid out per channel in blocks of ``[MAV, WL, VAR, SSC, ZC]``,
so ``td5[..., 0::5]`` is the MAV vector.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

MODES = ("MAV", "TD5")
TD5_ORDER = ("MAV", "WL", "VAR", "SSC", "ZC")


def _check_len(x: np.ndarray, minimum: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] < minimum:
        raise ValueError(f"{name} needs a window of at least {minimum} samples")
    return x


def n_windows(n_samples: int, window_len: int, step: int) -> int:
    if window_len < 2 or step < 1:
        raise ValueError("window_len must be >= 2 and step >= 1")
    if n_samples < window_len:
        return 0
    return (n_samples - window_len) // step + 1


def window_starts(n_samples: int, window_len: int, step: int) -> np.ndarray:
    return np.arange(n_windows(n_samples, window_len, step)) * step


def frame_stream(signal, window_len: int, step: int) -> np.ndarray:
    """Frame a ``(N, F)`` signal into windows of shape ``(n, F, window_len)``.

    Window ``k`` starts at sample ``k * step``; a session shorter than one
    window gives an empty ``(0, F, window_len)`` array. The result is a
    read-only view into ``signal``.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = n_windows(x.shape[0], window_len, step)
    if n == 0:
        return np.empty((0, x.shape[1], window_len))
    # (N - W + 1, F, W), then keep every step-th start
    return sliding_window_view(x, window_len, axis=0)[::step]


def mav(x) -> np.ndarray | float:
    x = _check_len(x, 1, "mav")
    return np.mean(np.abs(x), axis=-1)


def waveform_length(x) -> np.ndarray | float:
    x = _check_len(x, 2, "waveform_length")
    return np.sum(np.abs(np.diff(x, axis=-1)), axis=-1)


def variance(x) -> np.ndarray | float:
    """Population variance (divides by W)."""
    x = _check_len(x, 2, "variance")
    return np.var(x, axis=-1)


def zero_crossings(x, eps: float = 0.0) -> np.ndarray | int:
    """Count sign changes between neighbours whose jump is at least ``eps``.

    An exact zero has sign 0 and never takes part in a crossing.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    x = _check_len(x, 2, "zero_crossings")
    a, b = x[..., :-1], x[..., 1:]
    hits = (a * b < 0) & (np.abs(a - b) >= eps)
    return np.sum(hits, axis=-1)


def slope_sign_changes(x, eps: float = 0.0) -> np.ndarray | int:
    if eps < 0:
        raise ValueError("eps must be non-negative")
    x = _check_len(x, 3, "slope_sign_changes")
    back = x[..., 1:-1] - x[..., :-2]
    fwd = x[..., 1:-1] - x[..., 2:]
    big = np.maximum(np.abs(back), np.abs(fwd)) >= eps
    return np.sum((back * fwd > 0) & big, axis=-1)


def extract_features(window, mode: str = "MAV", eps: float = 0.0) -> np.ndarray:
    """Feature vector(s) for a ``(F, W)`` window or a ``(n, F, W)`` stack.

    MAV mode gives ``F`` values per window, TD5 mode ``5 * F``.
    """
    w = np.asarray(window, dtype=float)
    if mode == "MAV":
        return mav(w)
    if mode != "TD5":
        raise ValueError(f"unknown feature mode {mode!r}; expected one of {MODES}")
    blocks = [
        mav(w),
        waveform_length(w),
        variance(w),
        slope_sign_changes(w, eps).astype(float),
        zero_crossings(w, eps).astype(float),
    ]
    # (..., F, 5) -> (..., 5F) channel-major
    stacked = np.stack(blocks, axis=-1)
    return stacked.reshape(stacked.shape[:-2] + (-1,))


def extract_stream(signal, window_len: int, step: int, mode: str = "MAV",
                   eps: float = 0.0) -> np.ndarray:
    """Frame and featurize a whole signal: returns ``(n_steps, K)``."""
    windows = frame_stream(signal, window_len, step)
    n_ch = windows.shape[1]
    width = n_ch if mode == "MAV" else 5 * n_ch
    if len(windows) == 0:
        return np.empty((0, width))
    return extract_features(windows, mode, eps)


def n_features(n_channels: int, mode: str) -> int:
    return n_channels if mode == "MAV" else 5 * n_channels


def build_sequences(features, T: int) -> np.ndarray:
    """Stack the length-``T`` history ending at every step: ``(n, K, T)``.

    The first ``T - 1`` sequences are left-padded with zero columns; column
    ``T - 1`` of sequence ``t`` is always ``features[t]``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    f = np.asarray(features, dtype=float)
    if f.ndim != 2:
        raise ValueError("features must be a (n_steps, K) matrix")
    n, k = f.shape
    if n == 0:
        return np.empty((0, k, T))
    padded = np.concatenate([np.zeros((T - 1, k)), f], axis=0)
    return sliding_window_view(padded, T, axis=0)


def sequence_mask(n_steps: int, T: int) -> np.ndarray:
    """Boolean ``(n, T)`` mask: False where a column is warm-up padding."""
    cols = np.arange(T)[None, :]
    t = np.arange(n_steps)[:, None]
    return cols >= (T - 1 - t)


def sequence_labels(labels, T: int) -> np.ndarray:
    """Per-column labels aligned with :func:`build_sequences`; padding is -1."""
    y = np.asarray(labels, dtype=np.int64)
    padded = np.concatenate([np.full(T - 1, -1, dtype=np.int64), y])
    return sliding_window_view(padded, T)


class Standardizer:
    """Per-feature z-scoring fit on training features (off by default)."""

    def __init__(self, mean, scale):
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)

    @classmethod
    def fit(cls, features) -> "Standardizer":
        f = np.asarray(features, dtype=float)
        sd = f.std(axis=0)
        sd[sd == 0] = 1.0
        return cls(f.mean(axis=0), sd)

    def __call__(self, features) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.mean) / self.scale
