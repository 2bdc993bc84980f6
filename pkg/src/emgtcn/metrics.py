"""Prediction-stream metrics: accuracy, class-switch stability, ANOVA.

Stability compares how often a prediction stream changes class with how
often the ground truth does::

    S = 1 - |switches(p) - switches(t)| / (N - 1)

so a stream that switches exactly as often as the truth scores 1 even when
it is shifted in time.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np


def _pair(p, t) -> tuple[np.ndarray, np.ndarray]:
    p, t = np.asarray(p), np.asarray(t)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"prediction and truth streams must be 1-D and aligned "
                         f"(got {p.shape} and {t.shape})")
    return p, t


def accuracy(p, t, mask=None) -> float:
    p, t = _pair(p, t)
    sel = np.ones(len(p), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if sel.shape != p.shape:
        raise ValueError("mask must align with the streams")
    if not sel.any():
        raise ValueError("mask selects no time-steps")
    return float(np.mean(p[sel] == t[sel]))


def switch_count(p) -> int:
    p = np.asarray(p)
    if p.ndim != 1 or len(p) < 2:
        raise ValueError("switch count needs a stream of at least 2 predictions")
    return int(np.count_nonzero(p[1:] != p[:-1]))


def stability(p, t) -> float:
    p, t = _pair(p, t)
    n = len(p)
    return 1.0 - abs(switch_count(p) - switch_count(t)) / (n - 1)


def runs(mask) -> list[tuple[int, int]]:
    """Maximal ``[start, stop)`` runs where ``mask`` is True."""
    m = np.concatenate([[False], np.asarray(mask, dtype=bool), [False]])
    edges = np.flatnonzero(m[1:] != m[:-1])
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def masked_stability(p, t, mask) -> float | None:
    """Run-length-weighted stability over maximal runs (length >= 2) of ``mask``."""
    p, t = _pair(p, t)
    num = den = 0
    for a, b in runs(mask):
        if b - a >= 2:
            num += (b - a) * stability(p[a:b], t[a:b])
            den += b - a
    return num / den if den else None


@dataclass
class EvalReport:
    n: int
    accuracy: float
    stability: float
    switches_pred: int
    switches_true: int
    accuracy_steady: float | None = None
    accuracy_transient: float | None = None
    stability_steady: float | None = None
    stability_transient: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def segment_report(p, t, transient=None) -> EvalReport:
    """Overall and per-state accuracy and stability.

    ``transient`` is a boolean mask (True = transient); a state that never
    occurs, or never for 2 consecutive steps, leaves its fields as ``None``.
    """
    p, t = _pair(p, t)
    tr = np.zeros(len(p), dtype=bool) if transient is None else np.asarray(transient, dtype=bool)
    if tr.shape != p.shape:
        raise ValueError("state tags must align with the streams")
    rep = EvalReport(
        n=len(p),
        accuracy=accuracy(p, t),
        stability=stability(p, t),
        switches_pred=switch_count(p),
        switches_true=switch_count(t),
    )
    steady = ~tr
    if steady.any():
        rep.accuracy_steady = accuracy(p, t, steady)
        rep.stability_steady = masked_stability(p, t, steady)
    if tr.any():
        rep.accuracy_transient = accuracy(p, t, tr)
        rep.stability_transient = masked_stability(p, t, tr)
    return rep


def stderr(values) -> float:
    """Standard error of the mean (sample standard deviation / sqrt(n))."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("standard error needs at least 2 values")
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def _betacf(a: float, b: float, x: float, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    # the fraction converges fast on this side of the mean; use symmetry otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def f_sf(F: float, df1: float, df2: float) -> float:
    """Survival function of the F distribution, via ``I_{d2/(d2+d1 F)}(d2/2, d1/2)``."""
    if F <= 0:
        return 1.0
    if math.isinf(F):
        return 0.0
    return betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * F))


@dataclass(frozen=True)
class AnovaResult:
    F: float
    p_value: float
    df_between: int
    df_within: int


def anova_oneway(groups) -> AnovaResult:
    gs = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(gs) < 2 or any(g.size < 2 for g in gs):
        raise ValueError("one-way ANOVA needs >= 2 groups of >= 2 values each")
    allv = np.concatenate(gs)
    grand = allv.mean()
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in gs)
    ss_within = sum(float(np.sum((g - g.mean()) ** 2)) for g in gs)
    df_b, df_w = len(gs) - 1, allv.size - len(gs)
    if ss_within <= 0:
        raise ValueError("degenerate ANOVA: zero variance within every group")
    F = (ss_between / df_b) / (ss_within / df_w)
    return AnovaResult(float(F), f_sf(F, df_b, df_w), df_b, df_w)
