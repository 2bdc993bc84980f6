"""Acceptance gate: one test per primary criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import math
import sys
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from emgtcn import baselines as bl  # noqa: E402
from emgtcn import experiment as ex  # noqa: E402
from emgtcn import metrics as mt  # noqa: E402
from emgtcn import tcn  # noqa: E402
from emgtcn.nn import TrainConfig  # noqa: E402
from emgtcn.synth import Session, SynthConfig, synth_session  # noqa: E402
from emgtcn.tcn import TcnParams  # noqa: E402

from oracles import central_diff, conv_oracle, head_oracle, stability_oracle  # noqa: E402

RESULTS: list[str] = []


def record(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def grad_rel_err(a, n):
    # relative error with a small floor so entries that are zero analytically compare absolutely
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)))


def test_gradient_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_tcn = worst_mlp = 0.0
    for _ in range(20):
        p = TcnParams(rng.normal(size=(4, 3, 2)), rng.normal(size=4),
                      rng.normal(size=(3, 4)), rng.normal(size=3))
        X = rng.normal(size=(2, 5))
        y = rng.integers(0, 3, 5)
        g = tcn.backward(p, X, y)
        num = central_diff(lambda: tcn.loss(tcn.forward(p, X)[1], y), p.arrays(), h=1e-5)
        worst_tcn = max(worst_tcn, *(grad_rel_err(a, n) for a, n in zip(g.arrays(), num)))
    for _ in range(20):
        m = bl.MlpModel.init(4, 3, (5, 5, 5), rng)
        m.biases = [rng.normal(size=b.shape) * 0.3 for b in m.biases]
        X = rng.normal(size=(6, 4))
        y = rng.integers(0, 3, 6)
        g = bl.mlp_loss_and_grad(m, X, y)[1]
        num = central_diff(lambda: bl.mlp_loss(m, X, y), m.arrays(), h=1e-5)
        worst_mlp = max(worst_mlp, *(grad_rel_err(a, n) for a, n in zip(g, num)))
    dt = time.perf_counter() - t0
    record("gradient correctness", worst_tcn < 1e-4 and worst_mlp < 1e-4 and dt < 30,
           f"max rel err TCN {worst_tcn:.2e}, MLP {worst_mlp:.2e} (tol 1e-4); {dt:.1f} s (< 30 s)")


def test_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        M, d, F, C, T = (int(v) for v in rng.integers(1, 6, 5))
        p = TcnParams(rng.normal(size=(M, d, F)), rng.normal(size=M),
                      rng.normal(size=(C, M)), rng.normal(size=C))
        X = rng.normal(size=(F, T))
        E = tcn.conv_forward(p, X)
        worst = max(worst, np.abs(E - conv_oracle(p.W, p.b, X)).max(),
                    np.abs(tcn.head_forward(p, E) - head_oracle(p.U, p.c, E)).max())
    dt = time.perf_counter() - t0
    record("conv/head oracle equivalence", worst <= 1e-12 and dt < 5,
           f"max abs diff {worst:.1e} over 50 instances (tol 1e-12); {dt:.2f} s (< 5 s)")


def test_stability_exactness():
    rng = np.random.default_rng(3)
    hand = mt.stability([0, 1, 0, 1, 1], [0, 0, 1, 1, 1])
    mismatches = out_of_range = not_one = 0
    for _ in range(1000):
        n = int(rng.integers(2, 200))
        k = int(rng.integers(1, 28))
        p, t = rng.integers(0, k, n), rng.integers(0, k, n)
        s = mt.stability(p, t)
        mismatches += s != stability_oracle(p.tolist(), t.tolist())
        out_of_range += not 0.0 <= s <= 1.0
        not_one += mt.stability(p, p) != 1.0
    ok = hand == 0.5 and mismatches == out_of_range == not_one == 0
    record("stability exactness", ok,
           f"hand example S={hand}; 1000 random pairs: {mismatches} mismatches, "
           f"{out_of_range} outside [0,1], {not_one} with S(p,p) != 1")


def separable_sequences(seed, n=200, F=8, T=10, C=3):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, C, n)
    X = y[:, None, None] + rng.uniform(0.1, 0.9, size=(n, F, T))
    return X, np.repeat(y[:, None], T, axis=1)


def test_overfit_capability():
    t0 = time.perf_counter()
    X, y = separable_sequences(11)
    cfg = TrainConfig(epochs=200, seed=5)
    a = tcn.train(X, y, cfg)
    acc = float(np.mean(tcn.forward(a, X)[1].argmax(axis=1) == y))
    b = tcn.train(X, y, cfg)
    same = all(np.array_equal(u, v) for u, v in zip(a.arrays(), b.arrays()))
    dt = time.perf_counter() - t0
    record("overfit capability", acc >= 0.99 and same and dt < 60,
           f"training accuracy {acc:.4f} (>= 0.99) after 200 epochs, default TCN; "
           f"repeat run bit-identical: {same}; {dt:.1f} s for both runs (< 60 s)")


def test_model_comparison_direction():
    t0 = time.perf_counter()
    cfg0 = ex.ExperimentConfig()
    acc_t, acc_k, stab_wins, lines = [], [], 0, []
    for seed in range(5):
        cfg = ex.ExperimentConfig(seed=seed)
        session = synth_session(cfg.synth_config(), seed)
        reps = {kind: ex.evaluate(ex.train_model(kind, session, cfg), session, cfg,
                                  expected_mode=cfg.mode_for(kind)).report
                for kind in ("tcn", "knn", "mlp")}
        acc_t.append(reps["tcn"].accuracy_transient)
        acc_k.append(reps["knn"].accuracy_transient)
        win = reps["tcn"].stability >= max(reps["knn"].stability, reps["mlp"].stability)
        stab_wins += win
        lines.append(f"seed {seed}: transient acc TCN {acc_t[-1]:.3f} kNN {acc_k[-1]:.3f}; "
                     f"S TCN {reps['tcn'].stability:.4f} kNN {reps['knn'].stability:.4f} "
                     f"MLP {reps['mlp'].stability:.4f}")
    dt = time.perf_counter() - t0
    for ln in lines:
        print("   ", ln)
    a_ok = np.mean(acc_t) > np.mean(acc_k)
    b_ok = stab_wins >= 4
    record("TCN vs baselines direction", a_ok and b_ok and dt < 300,
           f"(a) mean transient acc TCN(MAV) {np.mean(acc_t):.3f} vs kNN(TD5) {np.mean(acc_k):.3f}; "
           f"(b) TCN stability >= kNN and MLP{'(z-scored TD5)' if cfg0.mlp_standardize else ''} "
           f"in {stab_wins}/5 seeds (need 4); "
           f"{cfg0.duration_s / 60:.0f}-min sessions, {dt:.0f} s (< 300 s)")


def test_sequence_length_direction():
    t0 = time.perf_counter()
    cfg = ex.ExperimentConfig(seed=0)
    session = synth_session(cfg.synth_config(), 0)
    rows = ex.run_sweep(session, cfg)
    acc = {(r["window"], r["T"]): r["accuracy"] for r in rows}
    dt = time.perf_counter() - t0
    ok = all(r["status"] == "ok" for r in rows) and all(
        acc[(W, 1)] < acc[(W, 60)] for W in (20, 40))
    grid = ", ".join(f"W={W} T={T}: {a:.3f}" for (W, T), a in acc.items() if a is not None)
    record("sequence-length direction", ok and dt < 600,
           f"acc(T=1) < acc(T=60) for W in {{20, 40}}; {grid}; "
           f"{cfg.sweep_epochs} epochs/cell, {dt:.0f} s (< 600 s)")


def f_pvalue_quadrature(F, d1, d2):
    mpmath.mp.dps = 30
    d1, d2 = mpmath.mpf(d1), mpmath.mpf(d2)
    beta = mpmath.beta(d1 / 2, d2 / 2)

    def dens_u(u):  # F density after x = u / (1 - u)
        x = u / (1 - u)
        return (mpmath.sqrt((d1 * x) ** d1 * d2 ** d2 / (d1 * x + d2) ** (d1 + d2))
                / (x * beta) / (1 - u) ** 2)

    u0 = mpmath.mpf(F) / (1 + mpmath.mpf(F))
    return float(mpmath.quad(dens_u, [u0, (u0 + 1) / 2, 1]))


def test_anova_correctness():
    r = mt.anova_oneway([[1, 2, 3], [4, 5, 6]])
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(20):
        groups = [rng.normal(rng.normal(0, 0.7), 1, size=int(rng.integers(2, 9)))
                  for _ in range(int(rng.integers(2, 6)))]
        res = mt.anova_oneway(groups)
        worst = max(worst, abs(res.p_value - f_pvalue_quadrature(res.F, res.df_between, res.df_within)))
    ok = math.isclose(r.F, 13.5, rel_tol=1e-12) and worst < 1e-6
    record("ANOVA correctness", ok,
           f"F={r.F:.12g} for {{1,2,3}} vs {{4,5,6}}; max |p - quadrature| {worst:.1e} (tol 1e-6)")


def test_protocol_integrity():
    cfg = ex.ExperimentConfig(duration_s=120.0)
    session = synth_session(cfg.synth_config(), 0)
    k = ex.split_index(len(session), cfg.train_fraction)
    rng = np.random.default_rng(1)
    base = {m: ex.streams(session, cfg, m)[0] for m in ("MAV", "TD5")}
    base_prof = ex.calibration(session, cfg)
    idxs = [k, k + 1, len(session) - 1, *rng.integers(k, len(session), 40).tolist()]
    leaks = 0
    for idx in idxs:
        emg, joints = session.emg.copy(), session.joints.copy()
        emg[idx] += 100.0
        joints[idx] = [2.0, -2.0, 2.0]
        other = Session(emg, joints, None, session.sample_rate)
        prof = ex.calibration(other, cfg)
        leaks += not (np.array_equal(prof.hi, base_prof.hi) and np.array_equal(prof.lo, base_prof.lo))
        for m, b in base.items():
            s = ex.streams(other, cfg, m)[0]
            leaks += not (np.array_equal(s.features, b.features) and np.array_equal(s.labels, b.labels)
                          and np.array_equal(s.transient, b.transient))
    bad_len = n_cfg = 0
    for W in (3, 10, 20, 40, 64):
        for step in (1, 5, 7):
            for frac in (0.3, 0.5):
                c = ex.ExperimentConfig(window_len=W, step=step, train_fraction=frac)
                for m in ("MAV", "TD5"):
                    for s in ex.streams(session, c, m):
                        n_cfg += 1
                        bad_len += not (len(s.features) == len(s.labels) == len(s.transient))
    record("protocol integrity", leaks == 0 and bad_len == 0,
           f"{len(idxs)} test-half perturbations changed training inputs {leaks} times; "
           f"stream lengths disagreed in {bad_len}/{n_cfg} configs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
