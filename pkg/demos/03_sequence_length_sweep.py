"""
Accuracy over window length and sequence length
===============================================

Sweeps the TCN over two window lengths and three sequence lengths. With
T=1 the filters see a single feature vector next to zero padding, so the
model is reduced to a per-window classifier.
"""

import sys

from emgtcn import experiment as ex
from emgtcn.cli import format_table
from emgtcn.synth import synth_session

quick = "--quick" in sys.argv
cfg = ex.ExperimentConfig(sweep_epochs=3 if quick else 10,
                          duration_s=180.0 if quick else 360.0)
session = synth_session(cfg.synth_config(), 0)

rows = ex.run_sweep(session, cfg)
print(format_table(["window", "T", "accuracy", "status"],
                   [[r["window"], r["T"], r["accuracy"], r["status"]] for r in rows]))

###############################################################################
# Same grid as a small matrix: rows are window lengths, columns are T.
Ts = sorted({r["T"] for r in rows})
for W in sorted({r["window"] for r in rows}):
    accs = [next(r["accuracy"] for r in rows if r["window"] == W and r["T"] == T) for T in Ts]
    print(f"W={W:3d}  " + "  ".join(f"T={T}:{a:.3f}" for T, a in zip(Ts, accs)))
