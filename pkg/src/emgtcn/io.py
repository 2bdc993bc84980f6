"""CSV files and model checkpoints.

Session CSV   ``t,ch1..ch8,theta1,theta2,theta3``   one row per EMG sample
Script CSV    ``index,e1,e2,e3,class,hold_s,ramp_s``  synthetic movement script
Feature CSV   ``t,f1..fK``                           one row per time-step
Label CSV     ``t,class,e1,e2,e3,state``             state is S or T
Trace CSV     ``t,truth,pred,state,correct``

Checkpoints are JSON (``.json``, bit-exact float round trip) or NumPy
archives (``.npz``). Both hold a model-kind tag, hyper dimensions, every
tensor with its shape in row-major order, and the training settings.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import KnnModel, MlpModel
from .labeling import N_DOF, STEADY, TRANSIENT, pack_class, tag_letters, unpack_class
from .synth import Segment, Session
from .tcn import TcnParams

FORMAT = "emgtcn-checkpoint"
VERSION = 1
KINDS = ("tcn", "knn", "mlp")


def _write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    return rows[0], rows[1:]


def write_session(path, session: Session) -> None:
    n_ch = session.emg.shape[1]
    header = ["t", *(f"ch{i + 1}" for i in range(n_ch)), *(f"theta{i + 1}" for i in range(N_DOF))]
    data = np.column_stack([session.emg, session.joints])
    rows = ([k, *map(repr, r)] for k, r in enumerate(data.tolist()))
    _write_rows(path, header, rows)


def read_session(path, sample_rate: float = 200.0) -> Session:
    header, rows = _read_table(path)
    if header[0] != "t" or not header[-N_DOF:] == [f"theta{i + 1}" for i in range(N_DOF)]:
        raise ValueError(f"{path}: expected header t,ch1..chF,theta1..theta3")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    t = data[:, 0]
    if len(t) > 1 and np.any(np.diff(t) != 1):
        raise ValueError(f"{path}: sample index must increase by 1 per row")
    n_ch = len(header) - 1 - N_DOF
    return Session(data[:, 1:1 + n_ch], data[:, 1 + n_ch:], None, sample_rate)


def write_script(path, script) -> None:
    rows = ([i, *seg.target, pack_class(seg.target), repr(seg.hold_s), repr(seg.ramp_s)]
            for i, seg in enumerate(script))
    _write_rows(path, ["index", "e1", "e2", "e3", "class", "hold_s", "ramp_s"], rows)


def read_script(path) -> list[Segment]:
    _, rows = _read_table(path)
    return [Segment(tuple(int(v) for v in r[1:4]), float(r[5]), float(r[6])) for r in rows]


def write_features(path, features) -> None:
    f = np.asarray(features, dtype=float)
    header = ["t", *(f"f{i + 1}" for i in range(f.shape[1]))]
    _write_rows(path, header, ([k, *map(repr, r)] for k, r in enumerate(f.tolist())))


def read_features(path) -> np.ndarray:
    header, rows = _read_table(path)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return data[:, 1:]


def write_labels(path, labels, transient) -> None:
    labels = np.asarray(labels, dtype=np.int64)
    states = tag_letters(transient)
    rows = ([k, int(c), *unpack_class(int(c)), s] for k, (c, s) in enumerate(zip(labels, states)))
    _write_rows(path, ["t", "class", "e1", "e2", "e3", "state"], rows)


def read_labels(path) -> tuple[np.ndarray, np.ndarray]:
    _, rows = _read_table(path)
    labels = np.array([int(r[1]) for r in rows], dtype=np.int64)
    transient = np.array([r[5] == TRANSIENT for r in rows], dtype=bool)
    return labels, transient


def write_trace(path, truth, pred, transient) -> None:
    states = tag_letters(transient)
    rows = ([k, int(t), int(p), s, int(t == p)]
            for k, (t, p, s) in enumerate(zip(truth, pred, states)))
    _write_rows(path, ["t", "truth", "pred", "state", "correct"], rows)


def read_trace(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    _, rows = _read_table(path)
    truth = np.array([int(r[1]) for r in rows], dtype=np.int64)
    pred = np.array([int(r[2]) for r in rows], dtype=np.int64)
    transient = np.array([r[3] == TRANSIENT for r in rows], dtype=bool)
    return truth, pred, transient


def write_table(path, header, rows) -> None:
    _write_rows(path, header, rows)


def read_table(path) -> list[dict]:
    header, rows = _read_table(path)
    return [dict(zip(header, r)) for r in rows]


@dataclass
class Checkpoint:
    kind: str
    model: TcnParams | KnnModel | MlpModel
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")


def _tensors(ckpt: Checkpoint) -> tuple[dict, dict[str, np.ndarray]]:
    m = ckpt.model
    if ckpt.kind == "tcn":
        return m.hyper, {"W": m.W, "b": m.b, "U": m.U, "c": m.c}
    if ckpt.kind == "knn":
        return {"k": m.k, "N": len(m.X), "K": m.X.shape[1]}, {"X": m.X, "y": m.y}
    tensors = {f"W{i}": w for i, w in enumerate(m.weights)}
    tensors.update({f"b{i}": b for i, b in enumerate(m.biases)})
    return {"sizes": m.sizes}, tensors


def _build(kind: str, hyper: dict, t: dict[str, np.ndarray]):
    if kind == "tcn":
        return TcnParams(t["W"], t["b"], t["U"], t["c"])
    if kind == "knn":
        return KnnModel(t["X"], t["y"].astype(np.int64), int(hyper["k"]))
    n = len(hyper["sizes"]) - 1
    return MlpModel([t[f"W{i}"] for i in range(n)], [t[f"b{i}"] for i in range(n)])


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    hyper, tensors = _tensors(ckpt)
    header = {"format": FORMAT, "version": VERSION, "kind": ckpt.kind,
              "hyper": hyper, "meta": ckpt.meta}
    if path.suffix == ".npz":
        with open(path, "wb") as fh:
            np.savez(fh, __header__=np.array(json.dumps(header)), **tensors)
        return
    header["tensors"] = {
        name: {"shape": list(a.shape), "dtype": "int64" if a.dtype.kind in "iu" else "float64",
               "data": a.ravel().tolist()}
        for name, a in tensors.items()
    }
    path.write_text(json.dumps(header))


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    if path.suffix == ".npz":
        with np.load(path, allow_pickle=False) as z:
            if "__header__" not in z.files:
                raise ValueError(f"{path}: not an {FORMAT} file")
            header = json.loads(str(z["__header__"]))
            tensors = {k: z[k] for k in z.files if k != "__header__"}
    else:
        try:
            header = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from None
        tensors = None
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise ValueError(f"{path}: not an {FORMAT} file")
    if tensors is None:
        tensors = {
            name: np.array(spec["data"], dtype=spec["dtype"]).reshape(spec["shape"])
            for name, spec in header["tensors"].items()
        }
    kind = header["kind"]
    return Checkpoint(kind, _build(kind, header["hyper"], tensors), header.get("meta", {}))


__all__ = [
    "Checkpoint", "KINDS", "STEADY", "TRANSIENT",
    "load_checkpoint", "read_features", "read_labels", "read_script", "read_session",
    "read_table", "read_trace", "save_checkpoint", "write_features", "write_labels",
    "write_script", "write_session", "write_table", "write_trace",
]
