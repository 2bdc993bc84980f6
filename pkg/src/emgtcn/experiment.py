"""End-to-end protocol: time split, feature/label streams, training, evaluation.

The first ``train_fraction`` of a session's samples is the training half and
the rest the test half. Each half is framed on its own, so windows that
would straddle the boundary belong to neither set and no test sample can
reach a training input.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import baselines, labeling, metrics, tcn
from .io import Checkpoint
from .nn import TrainConfig
from .signal_pipeline import (Standardizer, build_sequences, extract_stream,
                              sequence_labels)
from .synth import Session, SynthConfig

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    # framing
    window_len: int = 40          # samples (200 ms at 200 Hz)
    step: int = 5                 # samples (25 ms)
    T: int = 60                   # sequence length in steps
    eps: float = 0.0              # ZC/SSC deadzone
    standardize: bool = False     # z-score features for every model
    # protocol
    train_fraction: float = 0.5
    v_thresh: float = 0.1
    rest_override: str = "0,0,0"  # synthetic rest; "" = per-DOF median of the training half
    seed: int = 0
    # models
    tcn_mode: str = "MAV"
    knn_mode: str = "TD5"
    mlp_mode: str = "TD5"
    n_filters: int = 64
    filter_len: int = 25
    epochs: int = 35
    learning_rate: float = 1e-3
    batch_size: int = 32
    optimizer: str = "adam"
    final_column_only: bool = False
    knn_k: int = 3
    mlp_hidden: str = "5,5,5"
    mlp_epochs: int = 35
    mlp_learning_rate: float = 1e-3
    mlp_standardize: bool = True  # the MLP collapses on raw TD5 scales
    # synthetic sessions
    duration_s: float = 360.0
    sample_rate: float = 200.0
    sigma0: float = 2.0
    sigma1: float = 20.0
    burst_gain: float = 2.0
    # sweep
    sweep_windows: str = "20,40"
    sweep_T: str = "1,15,60"
    sweep_epochs: int = 10

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        for name in ("window_len", "step", "T", "n_filters", "filter_len", "batch_size", "knn_k"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.window_len < 2:
            raise ValueError("window_len must be >= 2")

    def mode_for(self, kind: str) -> str:
        return getattr(self, f"{kind}_mode")

    def train_config(self, kind: str = "tcn", epochs: int | None = None) -> TrainConfig:
        if kind == "mlp":
            return TrainConfig(epochs=self.mlp_epochs if epochs is None else epochs,
                               learning_rate=self.mlp_learning_rate,
                               batch_size=self.batch_size, seed=self.seed,
                               optimizer=self.optimizer)
        return TrainConfig(epochs=self.epochs if epochs is None else epochs,
                           learning_rate=self.learning_rate, batch_size=self.batch_size,
                           seed=self.seed, optimizer=self.optimizer,
                           final_column_only=self.final_column_only)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(duration_s=self.duration_s, sample_rate=self.sample_rate,
                           sigma0=self.sigma0, sigma1=self.sigma1,
                           burst_gain=self.burst_gain, seed=self.seed)

    @property
    def rest(self):
        return _floats(self.rest_override) if self.rest_override.strip() else None


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _coerce(kind: type, key: str, raw: str):
    if kind is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {key!r}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    types = {f.name: type(f.default) for f in fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(types[key], key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path=None, **overrides) -> ExperimentConfig:
    text = Path(path).read_text() if path else ""
    return parse_config(text, **overrides)


def format_config(cfg: ExperimentConfig) -> str:
    return "\n".join(f"{f.name} = {getattr(cfg, f.name)}" for f in fields(cfg)) + "\n"


@dataclass
class Stream:
    """Time-aligned per-step data for one half of a session."""
    features: np.ndarray
    labels: np.ndarray
    transient: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


def split_index(n_samples: int, train_fraction: float) -> int:
    return int(np.floor(train_fraction * n_samples))


def split_session(session: Session, cfg: ExperimentConfig) -> tuple[Session, Session]:
    k = split_index(len(session), cfg.train_fraction)
    head = Session(session.emg[:k], session.joints[:k], None, session.sample_rate)
    tail = Session(session.emg[k:], session.joints[k:], None, session.sample_rate)
    return head, tail


def calibration(session: Session, cfg: ExperimentConfig) -> labeling.CalibrationProfile:
    """Class thresholds from the training half only."""
    train, _ = split_session(session, cfg)
    return labeling.calibrate(train.joints, cfg.rest)


def make_stream(part: Session, profile, cfg: ExperimentConfig, mode: str,
                window_len: int | None = None) -> Stream:
    W = cfg.window_len if window_len is None else window_len
    feats = extract_stream(part.emg, W, cfg.step, mode, cfg.eps)
    labels = labeling.label_stream(part.joints, profile, cfg.step, W, len(part.emg))
    if len(part.joints) >= 2:
        tags = labeling.tag_states(part.joints, cfg.v_thresh, cfg.step, W)
    else:
        tags = np.zeros(len(labels), dtype=bool)
    return Stream(feats, labels, tags)


def streams(session: Session, cfg: ExperimentConfig, mode: str,
            window_len: int | None = None) -> tuple[Stream, Stream]:
    profile = calibration(session, cfg)
    train, test = split_session(session, cfg)
    return (make_stream(train, profile, cfg, mode, window_len),
            make_stream(test, profile, cfg, mode, window_len))


def train_model(kind: str, session: Session, cfg: ExperimentConfig, *,
                window_len: int | None = None, T: int | None = None,
                epochs: int | None = None) -> Checkpoint:
    mode = cfg.mode_for(kind)
    W = cfg.window_len if window_len is None else window_len
    T = cfg.T if T is None else T
    train, _ = streams(session, cfg, mode, W)
    if len(train) == 0:
        raise ValueError("training half is shorter than one window")
    feats = train.features
    meta = {"feature_mode": mode, "window_len": W, "step": cfg.step, "eps": cfg.eps,
            "seed": cfg.seed, "standardizer": None}
    if cfg.standardize or (kind == "mlp" and cfg.mlp_standardize):
        z = Standardizer.fit(feats)
        feats = z(feats)
        meta["standardizer"] = {"mean": z.mean.tolist(), "scale": z.scale.tolist()}
    tc = cfg.train_config(kind, epochs)
    if kind == "tcn":
        history: list[float] = []
        model = tcn.train(build_sequences(feats, T), sequence_labels(train.labels, T), tc,
                          n_filters=cfg.n_filters, filter_len=cfg.filter_len,
                          history=history)
        meta.update(T=T, train_config=tc.to_dict(), loss_history=history)
    elif kind == "knn":
        model = baselines.knn_fit(feats, train.labels, cfg.knn_k)
    elif kind == "mlp":
        history = []
        model = baselines.mlp_train(feats, train.labels, tc, hidden=tuple(_ints(cfg.mlp_hidden)),
                                    history=history)
        meta.update(train_config=tc.to_dict(), loss_history=history)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    log.info("trained %s on %d time-steps", kind, len(train))
    return Checkpoint(kind, model, meta)


def predict(ckpt: Checkpoint, features) -> np.ndarray:
    z = ckpt.meta.get("standardizer")
    if z:
        features = Standardizer(z["mean"], z["scale"])(features)
    if ckpt.kind == "tcn":
        return tcn.predict_stream(ckpt.model, features, int(ckpt.meta["T"]))
    if ckpt.kind == "knn":
        return baselines.knn_predict(ckpt.model, features)
    return baselines.mlp_predict(ckpt.model, np.atleast_2d(features))


@dataclass
class Evaluation:
    kind: str
    report: metrics.EvalReport
    truth: np.ndarray
    pred: np.ndarray
    transient: np.ndarray
    seed: int = 0


def evaluate(ckpt: Checkpoint, session: Session, cfg: ExperimentConfig,
             expected_mode: str | None = None) -> Evaluation:
    mode = ckpt.meta["feature_mode"]
    if expected_mode is not None and expected_mode != mode:
        raise ValueError(
            f"checkpoint {ckpt.kind} was trained on {mode} features but {expected_mode} was requested")
    run_cfg = replace(cfg, step=int(ckpt.meta["step"]), eps=float(ckpt.meta["eps"]))
    _, test = streams(session, run_cfg, mode, int(ckpt.meta["window_len"]))
    pred = predict(ckpt, test.features)
    rep = metrics.segment_report(pred, test.labels, test.transient)
    return Evaluation(ckpt.kind, rep, test.labels, pred, test.transient,
                      int(ckpt.meta.get("seed", cfg.seed)))


def sweep_cell(session: Session, cfg: ExperimentConfig, window_len: int, T: int,
               epochs: int | None = None) -> float:
    ckpt = train_model("tcn", session, cfg, window_len=window_len, T=T,
                       epochs=cfg.sweep_epochs if epochs is None else epochs)
    return evaluate(ckpt, session, cfg).report.accuracy


def run_sweep(session: Session, cfg: ExperimentConfig, windows=None, Ts=None,
              epochs: int | None = None) -> list[dict]:
    """Test accuracy of the TCN over a (window length, T) grid.

    A failing cell is reported with ``accuracy=None`` and its error message;
    the remaining cells still run.
    """
    windows = _ints(cfg.sweep_windows) if windows is None else list(windows)
    Ts = _ints(cfg.sweep_T) if Ts is None else list(Ts)
    if not windows or not Ts:
        raise ValueError("sweep grids must be non-empty")
    rows = []
    for W in windows:
        for T in Ts:
            try:
                acc = sweep_cell(session, cfg, W, T, epochs)
                rows.append({"window": W, "T": T, "accuracy": acc, "status": "ok"})
            except (ValueError, FloatingPointError) as exc:
                log.warning("sweep cell window=%d T=%d failed: %s", W, T, exc)
                rows.append({"window": W, "T": T, "accuracy": None, "status": f"failed: {exc}"})
    return rows


METRIC_KEYS = ("accuracy", "accuracy_steady", "accuracy_transient",
               "stability", "stability_steady", "stability_transient")


def compare(rows: list[dict], reference: str = "tcn") -> list[dict]:
    """Mean, standard error and one-way ANOVA vs ``reference`` per metric.

    ``rows`` are per-(model, seed) metric dicts with a ``model`` key.
    """
    by_model: dict[str, list[dict]] = {}
    for r in rows:
        by_model.setdefault(r["model"], []).append(r)
    out = []
    for model, group in by_model.items():
        for key in METRIC_KEYS:
            vals = [float(r[key]) for r in group if r.get(key) not in (None, "", "None")]
            entry = {"model": model, "metric": key, "n": len(vals),
                     "mean": float(np.mean(vals)) if vals else None,
                     "stderr": metrics.stderr(vals) if len(vals) >= 2 else None,
                     "F": None, "p_value": None}
            ref = [float(r[key]) for r in by_model.get(reference, [])
                   if r.get(key) not in (None, "", "None")]
            if model != reference and len(vals) >= 2 and len(ref) >= 2:
                try:
                    res = metrics.anova_oneway([ref, vals])
                    entry["F"], entry["p_value"] = res.F, res.p_value
                except ValueError:
                    pass
            out.append(entry)
    return out
