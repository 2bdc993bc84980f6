"""
TCN against frame-by-frame baselines
====================================

Trains the TCN on MAV features and k-NN and the MLP on TD5 features using
the first half of a 6-minute session, then scores all three on the second
half, split into steady and transient steps.

Pass ``--quick`` for a shorter run with fewer epochs.
"""

import sys

from emgtcn import experiment as ex
from emgtcn.cli import format_table
from emgtcn.synth import synth_session

quick = "--quick" in sys.argv
cfg = ex.ExperimentConfig(epochs=10 if quick else 35, seed=1)
session = synth_session(cfg.synth_config(), cfg.seed)

###############################################################################
# Train and evaluate each model through the same protocol the CLI uses.
rows = []
for kind in ("tcn", "knn", "mlp"):
    ckpt = ex.train_model(kind, session, cfg)
    r = ex.evaluate(ckpt, session, cfg).report
    rows.append([kind, ckpt.meta["feature_mode"], r.accuracy, r.accuracy_steady,
                 r.accuracy_transient, r.stability, r.switches_pred, r.switches_true])

print(format_table(["model", "features", "acc", "acc_S", "acc_T", "stability",
                    "switches", "true switches"], rows))

###############################################################################
# The frame-by-frame models flicker between classes far more often than the
# truth does, which is what the stability column measures. The TCN sees
# the last 25 steps through its filters and switches much less.
