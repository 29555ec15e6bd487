"""Paired-voice analysis: detect a pathological state from wet/dry recordings.

Pipeline: acoustic feature extraction, t-test feature selection, and two
classification schemes (patient-wise and speaker-decoupled pair-wise) on top
of from-scratch neural kernels, plus a trainable frequency-filter analysis
of which bands carry the signal.
"""

from . import audio, cohort, experiment, features, nn, stats, svgplot, synth
from .errors import VoicePairError
from .estimators import AffNetClassifier, DenseNetClassifier, TTestSelector

__version__ = "0.1.0"

__all__ = [
    "AffNetClassifier",
    "DenseNetClassifier",
    "TTestSelector",
    "VoicePairError",
    "audio",
    "cohort",
    "experiment",
    "features",
    "nn",
    "stats",
    "svgplot",
    "synth",
    "__version__",
]
