"""Ternary 3-DOF class encoding, 27-class packing and steady/transient tags.

Joint trajectories are ``(n_samples, 3)`` arrays. Labels and tags are produced
once per feature window and aligned to the window's last sample.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .signal_pipeline import window_starts

N_DOF = 3
N_CLASSES = 3 ** N_DOF
REST_CLASS = 13
STEADY, TRANSIENT = "S", "T"


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationProfile:
    theta_min: np.ndarray
    theta_max: np.ndarray
    theta_rest: np.ndarray

    def __post_init__(self):
        lo, rest, hi = self.theta_min, self.theta_rest, self.theta_max
        if not (np.all(lo < rest) and np.all(rest < hi)):
            raise CalibrationError(
                f"rest position must lie strictly inside [min, max] on every DOF "
                f"(min={lo}, rest={rest}, max={hi})")

    @property
    def hi(self) -> np.ndarray:
        return self.theta_rest + 0.5 * (self.theta_max - self.theta_rest)

    @property
    def lo(self) -> np.ndarray:
        return self.theta_rest - 0.5 * (self.theta_rest - self.theta_min)


def calibrate(trajectory, rest_override=None) -> CalibrationProfile:
    """Per-DOF extremes and rest position (median unless overridden)."""
    th = np.asarray(trajectory, dtype=float)
    if th.ndim != 2 or th.shape[0] == 0 or th.shape[1] != N_DOF:
        raise CalibrationError("trajectory must be a non-empty (n, 3) array")
    tmin, tmax = th.min(axis=0), th.max(axis=0)
    if np.any(tmin == tmax):
        bad = np.flatnonzero(tmin == tmax).tolist()
        raise CalibrationError(f"no usable range on DOF(s) {bad}")
    if rest_override is None:
        rest = np.median(th, axis=0)
    else:
        rest = np.broadcast_to(np.asarray(rest_override, dtype=float), (N_DOF,)).copy()
    return CalibrationProfile(tmin, tmax, rest)


def encode_dof(theta_i, profile: CalibrationProfile, dof: int):
    """+1 above the forward threshold, -1 below the reverse one, else 0."""
    th = np.asarray(theta_i, dtype=float)
    out = np.where(th > profile.hi[dof], 1, np.where(th < profile.lo[dof], -1, 0))
    return out.astype(np.int64) if out.ndim else int(out)


def encode(theta, profile: CalibrationProfile) -> np.ndarray:
    """Ternary encodings for ``(..., 3)`` joint positions."""
    th = np.asarray(theta, dtype=float)
    return np.where(th > profile.hi, 1, np.where(th < profile.lo, -1, 0)).astype(np.int64)


def pack_class(e):
    e = np.asarray(e, dtype=np.int64)
    if e.shape[-1] != N_DOF or np.any(np.abs(e) > 1):
        raise ValueError("ternary encodings need 3 entries in {-1, 0, 1}")
    c = (e[..., 0] + 1) * 9 + (e[..., 1] + 1) * 3 + (e[..., 2] + 1)
    return c if c.ndim else int(c)


def unpack_class(c):
    c = np.asarray(c, dtype=np.int64)
    if np.any((c < 0) | (c >= N_CLASSES)):
        raise ValueError(f"class index out of range [0, {N_CLASSES})")
    e = np.stack([c // 9, (c // 3) % 3, c % 3], axis=-1) - 1
    return e if e.ndim > 1 else tuple(int(v) for v in e)


def _window_ends(n_samples: int, step: int, window_len: int) -> np.ndarray:
    return window_starts(n_samples, window_len, step) + window_len - 1


def label_stream(joints, profile: CalibrationProfile, step: int, window_len: int,
                 n_emg_samples: int | None = None) -> np.ndarray:
    """One class label per feature window, from the joint state at window end."""
    th = np.asarray(joints, dtype=float)
    if n_emg_samples is not None and n_emg_samples != th.shape[0]:
        raise ValueError(
            f"joint stream has {th.shape[0]} samples but EMG has {n_emg_samples}")
    ends = _window_ends(th.shape[0], step, window_len)
    return np.asarray(pack_class(encode(th[ends], profile)), dtype=np.int64).reshape(-1)


def window_velocity(joints, step: int, window_len: int) -> np.ndarray:
    """Central-difference joint velocity averaged over each window: ``(n, 3)``."""
    th = np.asarray(joints, dtype=float)
    if th.shape[0] < 2:
        raise ValueError("need at least 2 joint samples")
    vel = np.gradient(th, axis=0)
    if th.shape[0] < window_len:
        return np.empty((0, th.shape[1]))
    return sliding_window_view(vel, window_len, axis=0)[::step].mean(axis=-1)


def tag_states(joints, v_thresh: float = 0.1, step: int = 5,
               window_len: int = 40) -> np.ndarray:
    """Boolean transient mask per window (True = transient).

    Each DOF's window velocity is divided by that DOF's largest absolute window
    velocity in the stream; a window is transient when the Euclidean norm of
    the normalized 3-vector exceeds ``v_thresh``.
    """
    v = window_velocity(joints, step, window_len)
    if len(v) == 0:
        return np.zeros(0, dtype=bool)
    peak = np.abs(v).max(axis=0)
    norm_v = np.divide(v, peak, out=np.zeros_like(v), where=peak > 0)
    return np.linalg.norm(norm_v, axis=1) > v_thresh


def tag_letters(transient) -> np.ndarray:
    return np.where(np.asarray(transient, dtype=bool), TRANSIENT, STEADY)
