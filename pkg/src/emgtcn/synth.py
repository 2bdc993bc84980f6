"""Synthetic 3-DOF sessions: scripted joint trajectories plus surrogate EMG.

The surrogate EMG is amplitude-modulated white noise. Channel ``j`` at sample
``k`` is ``(sigma0 + sigma1 * a[k, j]) * n[k, j]`` with ``n`` standard normal
and ``a`` the channel activation: the per-class gain rows interpolated over the
ternary cube at the current joint position, plus a co-contraction burst on
both antagonists of every DOF that is moving. At a plateau ``a`` equals the
gain row of the held class.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .labeling import N_CLASSES, N_DOF, pack_class, unpack_class

N_CHANNELS = 8

# channel pair and gain per (DOF, direction); every class gets a distinct row
_DIRECTION_GAINS = {
    (0, +1): ((0, 1), (1.0, 0.5)),
    (0, -1): ((4, 5), (1.0, 0.5)),
    (1, +1): ((2, 3), (1.0, 0.5)),
    (1, -1): ((6, 7), (1.0, 0.5)),
    (2, +1): ((1, 2), (0.6, 0.9)),
    (2, -1): ((5, 6), (0.6, 0.9)),
}


def default_gain_matrix() -> np.ndarray:
    """``(27, 8)`` gains: single-DOF directions superposed additively."""
    G = np.zeros((N_CLASSES, N_CHANNELS))
    for c in range(N_CLASSES):
        for dof, sign in enumerate(unpack_class(c)):
            if sign:
                chans, gains = _DIRECTION_GAINS[(dof, sign)]
                G[c, list(chans)] += gains
    return G


@dataclass
class SynthConfig:
    duration_s: float = 360.0
    sample_rate: float = 200.0
    hold_range: tuple[float, float] = (0.5, 5.0)
    ramp_range: tuple[float, float] = (0.2, 0.6)
    gains: np.ndarray = field(default_factory=default_gain_matrix)
    sigma0: float = 2.0    # noise floor, ADC units
    sigma1: float = 20.0   # contraction gain, ADC units per unit activation
    burst_gain: float = 2.0  # co-contraction while a DOF moves, per unit reference speed
    burst_ref_s: float = 0.4  # ramp duration whose peak speed counts as unit speed
    seed: int = 0

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        lo, hi = self.hold_range
        rlo, rhi = self.ramp_range
        if self.duration_s <= 0 or self.sample_rate <= 0:
            raise ValueError("duration and sample rate must be positive")
        if not (0 < lo <= hi <= 5.0):
            raise ValueError("hold range must satisfy 0 < min <= max <= 5 s")
        if not (0 < rlo <= rhi):
            raise ValueError("ramp range must be positive")
        if self.gains.shape != (N_CLASSES, N_CHANNELS) or np.any(self.gains < 0):
            raise ValueError(f"gains must be a non-negative {N_CLASSES}x{N_CHANNELS} matrix")
        if self.sigma0 < 0 or self.sigma1 < 0 or self.burst_gain < 0:
            raise ValueError("noise and burst parameters must be non-negative")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate))


class Segment(NamedTuple):
    target: tuple[int, int, int]
    hold_s: float
    ramp_s: float


MovementScript = list  # of Segment


def _streams(seed: int):
    script_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(script_ss), np.random.default_rng(noise_ss)


def movement_script(config: SynthConfig, seed: int | None = None) -> MovementScript:
    """Random freeform sequence of held classes, starting at rest.

    Each segment ramps from the previous plateau to a new class (never the
    same as the previous one) and then holds it. Segments are drawn until the
    session duration is covered.
    """
    rng = _streams(config.seed if seed is None else seed)[0]
    hold = rng.uniform(*config.hold_range)
    script = [Segment((0, 0, 0), float(hold), 0.0)]
    elapsed = hold
    current = pack_class((0, 0, 0))
    while elapsed < config.duration_s:
        nxt = int(rng.integers(N_CLASSES - 1))
        nxt += nxt >= current
        ramp = float(rng.uniform(*config.ramp_range))
        hold = float(rng.uniform(*config.hold_range))
        script.append(Segment(unpack_class(nxt), hold, ramp))
        elapsed += ramp + hold
        current = nxt
    return script


def raised_cosine(u):
    """Smooth 0 -> 1 transition on ``u`` in [0, 1] with zero end slopes."""
    u = np.clip(u, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * u)


def render_joints(script: MovementScript, config: SynthConfig) -> np.ndarray:
    """``(n_samples, 3)`` normalized joint positions (rest 0, forward +1, reverse -1)."""
    fs = config.sample_rate
    n = config.n_samples
    out = np.empty((n, N_DOF))
    k = 0
    prev = np.zeros(N_DOF)
    for seg in script:
        if k >= n:
            break
        target = np.asarray(seg.target, dtype=float)
        n_ramp = int(round(seg.ramp_s * fs))
        n_hold = int(round(seg.hold_s * fs))
        if n_ramp:
            # ramp sample i sits at progress (i + 1) / n_ramp, the last one on target
            u = raised_cosine((np.arange(n_ramp) + 1) / n_ramp)
            ramp = prev + u[:, None] * (target - prev)
            m = min(n_ramp, n - k)
            out[k:k + m] = ramp[:m]
            k += m
        m = min(n_hold, n - k)
        out[k:k + m] = target
        k += m
        prev = target
    if k < n:
        out[k:] = prev
    return out


def activation(joints, gains) -> np.ndarray:
    """Multilinear interpolation of class gain rows at each joint position."""
    th = np.clip(np.asarray(joints, dtype=float), -1.0, 1.0)
    mag = np.abs(th)
    sgn = np.sign(th).astype(np.int64)
    n = th.shape[0]
    a = np.zeros((n, gains.shape[1]))
    # each DOF blends rest (weight 1 - |theta|) with its signed direction (|theta|)
    for corner in np.ndindex(*(2,) * N_DOF):
        w = np.ones(n)
        e = np.zeros((n, N_DOF), dtype=np.int64)
        for i, active in enumerate(corner):
            if active:
                w = w * mag[:, i]
                e[:, i] = sgn[:, i]
            else:
                w = w * (1.0 - mag[:, i])
        a += w[:, None] * gains[pack_class(e)]
    return a


def cocontraction(joints, gains, sample_rate: float, ref_s: float) -> np.ndarray:
    """Activation of both antagonists of each moving DOF, scaled by its speed.

    Speed is measured relative to the peak speed of a unit raised-cosine ramp
    lasting ``ref_s`` seconds; the term vanishes on plateaus.
    """
    th = np.asarray(joints, dtype=float)
    if len(th) < 2:
        return np.zeros((len(th), gains.shape[1]))
    speed = np.abs(np.gradient(th, axis=0)) * sample_rate / (np.pi / (2.0 * ref_s))
    rest = gains[pack_class((0, 0, 0))]
    out = np.zeros((len(th), gains.shape[1]))
    for i in range(N_DOF):
        pair = np.zeros(gains.shape[1])
        for sign in (-1, 1):
            e = [0, 0, 0]
            e[i] = sign
            pair += gains[pack_class(e)] - rest
        out += speed[:, i:i + 1] * pair
    return out


def render_emg(joints, config: SynthConfig, seed: int | None = None) -> np.ndarray:
    """``(n_samples, 8)`` surrogate raw EMG for a joint trajectory."""
    rng = _streams(config.seed if seed is None else seed)[1]
    a = activation(joints, config.gains)
    if config.burst_gain:
        a = a + config.burst_gain * cocontraction(
            joints, config.gains, config.sample_rate, config.burst_ref_s)
    noise = rng.standard_normal(a.shape)
    return (config.sigma0 + config.sigma1 * a) * noise


@dataclass
class Session:
    emg: np.ndarray      # (N, 8)
    joints: np.ndarray   # (N, 3)
    script: MovementScript | None = None
    sample_rate: float = 200.0

    def __post_init__(self):
        if len(self.emg) != len(self.joints):
            raise ValueError("EMG and joint streams must have the same length")

    def __len__(self) -> int:
        return len(self.emg)


def synth_session(config: SynthConfig | None = None, seed: int | None = None) -> Session:
    config = SynthConfig() if config is None else config
    seed = config.seed if seed is None else seed
    script = movement_script(config, seed)
    joints = render_joints(script, config)
    emg = render_emg(joints, config, seed)
    return Session(emg, joints, script, config.sample_rate)
