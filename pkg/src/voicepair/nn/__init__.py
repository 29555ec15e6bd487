"""From-scratch differentiable kernels: dense net, AFF, encoder, training."""

from .aff import (
    AffMatrix,
    aff_apply,
    aff_init_mfcc,
    aff_trim,
    aggregate_importance,
    column_supports,
    importance_curve,
    trimmed_weights,
)
from .affnet import AffNet
from .dense import DenseNet3, he_uniform, log_softmax, softmax
from .encoder import SeqEncoder
from .gradcheck import gradient_check
from .serialize import load_model, model_from_dict, model_to_dict, save_model
from .train import Adam, Metrics, TrainConfig, evaluate, metrics_from_counts, train

__all__ = [
    "Adam",
    "AffMatrix",
    "AffNet",
    "DenseNet3",
    "Metrics",
    "SeqEncoder",
    "TrainConfig",
    "aff_apply",
    "aff_init_mfcc",
    "aff_trim",
    "aggregate_importance",
    "column_supports",
    "evaluate",
    "gradient_check",
    "he_uniform",
    "importance_curve",
    "load_model",
    "log_softmax",
    "metrics_from_counts",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "softmax",
    "train",
    "trimmed_weights",
]
