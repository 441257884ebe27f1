"""Multimodal gated-fusion sequence model for cognitive-impairment screening.

Two bidirectional LSTM branches (frame-statistic audio features; tagged word
vectors) are fused through stacked highway gating layers for binary
diagnosis classification and MMSE score regression. Includes the full
feature, disfluency-tagging, training, and evaluation pipeline plus a
synthetic dataset generator for end-to-end runs without clinical data.
"""

from .errors import ConfigError, DataError, GatedFusionError, NumericalError
from .kernels import ACTIVE as KERNEL_IMPLEMENTATION
from .model import BranchConfig, GatedFusionModel, ModelConfig
from .train_eval import MetricsReport, TrainConfig

__version__ = "0.1.0"

__all__ = [
    "BranchConfig",
    "ConfigError",
    "DataError",
    "GatedFusionError",
    "GatedFusionModel",
    "KERNEL_IMPLEMENTATION",
    "MetricsReport",
    "ModelConfig",
    "NumericalError",
    "TrainConfig",
    "__version__",
]
