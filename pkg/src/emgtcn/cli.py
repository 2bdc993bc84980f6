"""Command-line driver: ``emgtcn {synth,features,train,eval,sweep,report}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiment as ex
from . import io
from .labeling import N_CLASSES, pack_class
from .metrics import EvalReport
from .synth import synth_session

log = logging.getLogger("emgtcn")


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def format_table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _sidecar(out: Path, tag: str) -> Path:
    return out.with_name(f"{out.stem}.{tag}{out.suffix or '.csv'}")


def cmd_synth(cfg: ex.ExperimentConfig, out) -> dict:
    out = Path(out)
    session = synth_session(cfg.synth_config(), cfg.seed)
    io.write_session(out, session)
    io.write_script(_sidecar(out, "script"), session.script)
    visited = sorted({pack_class(seg.target) for seg in session.script})
    summary = {"duration_s": len(session) / session.sample_rate, "samples": len(session),
               "segments": len(session.script), "classes_visited": len(visited)}
    print(f"wrote {out}: {summary['duration_s']:.1f} s, {summary['samples']} samples, "
          f"{summary['segments']} segments, {summary['classes_visited']}/{N_CLASSES} classes visited")
    return summary


def cmd_features(cfg: ex.ExperimentConfig, session_path, out, kind: str = "tcn") -> None:
    """Feature CSV for the whole session plus a label/state sidecar."""
    out = Path(out)
    session = io.read_session(session_path, cfg.sample_rate)
    mode = cfg.mode_for(kind)
    profile = ex.calibration(session, cfg)
    stream = ex.make_stream(session, profile, cfg, mode)
    io.write_features(out, stream.features)
    io.write_labels(_sidecar(out, "labels"), stream.labels, stream.transient)
    print(f"wrote {out}: {len(stream)} time-steps x {stream.features.shape[1]} {mode} features")


def cmd_train(cfg: ex.ExperimentConfig, session_path, out, kind: str = "tcn") -> io.Checkpoint:
    session = io.read_session(session_path, cfg.sample_rate)
    ckpt = ex.train_model(kind, session, cfg)
    io.save_checkpoint(out, ckpt)
    print(f"wrote {out}: {kind} on {ckpt.meta['feature_mode']} features")
    return ckpt


def _report_rows(evals: list[ex.Evaluation], modes: list[str]) -> tuple[list[str], list[list]]:
    header = ["model", "seed", "feature_mode", *EvalReport.columns()]
    rows = [[e.kind, e.seed, m, *e.report.to_dict().values()] for e, m in zip(evals, modes)]
    return header, rows


def cmd_eval(cfg: ex.ExperimentConfig, session_path, checkpoints, out,
             kind: str | None = None) -> list[ex.Evaluation]:
    out = Path(out)
    session = io.read_session(session_path, cfg.sample_rate)
    evals, modes = [], []
    for i, path in enumerate(checkpoints):
        ckpt = io.load_checkpoint(path)
        if kind is not None and ckpt.kind != kind:
            raise ValueError(f"{path} holds a {ckpt.kind} model, not {kind}")
        e = ex.evaluate(ckpt, session, cfg, expected_mode=cfg.mode_for(ckpt.kind))
        io.write_trace(_sidecar(out, f"trace{i}-{ckpt.kind}"), e.truth, e.pred, e.transient)
        evals.append(e)
        modes.append(ckpt.meta["feature_mode"])
    header, rows = _report_rows(evals, modes)
    io.write_table(out, header, rows)
    shown = ["model", "seed", "accuracy", "accuracy_steady", "accuracy_transient",
             "stability", "stability_steady", "stability_transient"]
    sel = [header.index(c) for c in shown]
    print(format_table(shown, [[r[i] for i in sel] for r in rows]))
    dict_rows = [dict(zip(header, r)) for r in rows]
    if any(sum(1 for r in dict_rows if r["model"] == m) >= 2 for m in {r["model"] for r in dict_rows}):
        _print_comparison(ex.compare(dict_rows))
    return evals


def _print_comparison(entries: list[dict]) -> None:
    cols = ["model", "metric", "n", "mean", "stderr", "F", "p_value"]
    print()
    print(format_table(cols, [[e[c] for c in cols] for e in entries]))


def cmd_sweep(cfg: ex.ExperimentConfig, session_path, out) -> list[dict]:
    session = io.read_session(session_path, cfg.sample_rate)
    rows = ex.run_sweep(session, cfg)
    io.write_table(out, ["window", "T", "accuracy", "status"],
                   [[r["window"], r["T"], "" if r["accuracy"] is None else repr(r["accuracy"]),
                     r["status"]] for r in rows])
    print(format_table(["window", "T", "accuracy", "status"],
                       [[r["window"], r["T"], r["accuracy"], r["status"]] for r in rows]))
    return rows


def cmd_report(cfg: ex.ExperimentConfig, reports, out) -> list[dict]:
    """Aggregate eval reports (e.g. one per seed): mean, stderr, ANOVA vs TCN."""
    rows = []
    for path in reports:
        table = io.read_table(path)
        if table and not {"model", "seed"} <= table[0].keys():
            raise ValueError(f"{path}: not an eval report (no model/seed columns)")
        rows.extend(table)
    entries = ex.compare(rows)
    cols = ["model", "metric", "n", "mean", "stderr", "F", "p_value"]
    io.write_table(out, cols, [[("" if e[c] is None else e[c]) for c in cols] for e in entries])
    _print_comparison(entries)
    return entries


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emgtcn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=False):
        p.add_argument("--config", type=Path, help="flat 'key = value' experiment config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, required=True)
        if model:
            p.add_argument("--model", choices=io.KINDS, default=None)
        return p

    common(sub.add_parser("synth", help="generate a synthetic session CSV"))
    p = common(sub.add_parser("features", help="extract features and labels"), model=True)
    p.add_argument("session", type=Path)
    p = common(sub.add_parser("train", help="train a model on the first half"), model=True)
    p.add_argument("session", type=Path)
    p = common(sub.add_parser("eval", help="evaluate checkpoints on the second half"), model=True)
    p.add_argument("session", type=Path)
    p.add_argument("checkpoints", type=Path, nargs="+")
    p = common(sub.add_parser("sweep", help="TCN accuracy over window x T grid"))
    p.add_argument("session", type=Path)
    p = common(sub.add_parser("report", help="aggregate eval reports across seeds"))
    p.add_argument("reports", type=Path, nargs="+")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ex.load_config(args.config, seed=args.seed)
        if args.command == "synth":
            cmd_synth(cfg, args.out)
        elif args.command == "features":
            cmd_features(cfg, args.session, args.out, args.model or "tcn")
        elif args.command == "train":
            cmd_train(cfg, args.session, args.out, args.model or "tcn")
        elif args.command == "eval":
            cmd_eval(cfg, args.session, args.checkpoints, args.out, args.model)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.session, args.out)
        elif args.command == "report":
            cmd_report(cfg, args.reports, args.out)
    except (OSError, ValueError, KeyError, FloatingPointError) as exc:
        print(f"emgtcn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
