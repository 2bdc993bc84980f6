"""
From a synthetic session to feature, label and state streams
=============================================================

Generates one synthetic 3-DOF session, frames the EMG into 200 ms windows
every 25 ms, and shows what the classifiers will see at each step.
"""

import numpy as np

from emgtcn import experiment as ex
from emgtcn import labeling, signal_pipeline as sp
from emgtcn.synth import SynthConfig, synth_session

###############################################################################
# A short session: 8 EMG channels and 3 normalized joint angles at 200 Hz.
cfg = ex.ExperimentConfig(duration_s=60.0)
session = synth_session(cfg.synth_config(), seed=0)
print("EMG", session.emg.shape, "joints", session.joints.shape)
print("first movements:", [seg.target for seg in session.script[:5]])

###############################################################################
# Framing. 12000 samples with a 40-sample window and a 5-sample step.
print("windows:", sp.n_windows(len(session), cfg.window_len, cfg.step))

###############################################################################
# MAV gives 8 numbers per window; TD5 gives 40, laid out per channel as
# [MAV, WL, VAR, SSC, ZC]. The MAV entries of TD5 are the MAV vector.
mav = sp.extract_stream(session.emg, cfg.window_len, cfg.step, "MAV")
td5 = sp.extract_stream(session.emg, cfg.window_len, cfg.step, "TD5")
print("MAV", mav.shape, "TD5", td5.shape, "consistent:", np.array_equal(td5[:, 0::5], mav))

###############################################################################
# Labels come from the joint state at each window's last sample, using
# thresholds halfway between rest and each extreme.
profile = labeling.calibrate(session.joints, rest_override=cfg.rest)
labels = labeling.label_stream(session.joints, profile, cfg.step, cfg.window_len)
print("thresholds lo/hi:", profile.lo, profile.hi)
print("classes visited:", sorted(set(labels.tolist())))
print("class 22 is", labeling.unpack_class(22))

###############################################################################
# Steady/transient tags from the window-averaged joint velocity.
tags = labeling.tag_states(session.joints, cfg.v_thresh, cfg.step, cfg.window_len)
print(f"transient fraction: {tags.mean():.2f}")
print("state string:", "".join(labeling.tag_letters(tags[:80])))

###############################################################################
# A TCN input is the trailing history of T feature vectors, zero-padded at
# the start of the stream.
seqs = sp.build_sequences(mav, cfg.T)
print("sequences", seqs.shape, "first one padded columns:", int((seqs[0] == 0).all(axis=0).sum()))
