"""Causal temporal convolutional decoding of 3-DOF wrist/hand intent from surface EMG.

Modules: signal_pipeline (windowing, MAV/TD5 features, sequences), labeling
(joint trajectories to the 27-class ternary code), tcn (model and training),
baselines (k-NN, MLP), metrics (accuracy, stability, ANOVA), synth (synthetic
sessions), experiment (train/test protocol) and cli.
"""
from .labeling import N_CLASSES, pack_class, unpack_class
from .nn import TrainConfig
from .synth import SynthConfig, synth_session
from .tcn import TcnParams, predict_stream, train

__version__ = "0.1.0"

__all__ = ["N_CLASSES", "SynthConfig", "TcnParams", "TrainConfig", "pack_class",
           "predict_stream", "synth_session", "train", "unpack_class"]
