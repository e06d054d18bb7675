"""From-scratch CNN training engine: explicit forward and backward passes,
no autodiff framework. Arrays are NHWC; float64 is used in test mode so
finite-difference gradient checks are meaningful, float32 in training."""

from .adam import AdamState, adam_step, init_adam
from .checkpoint import load_checkpoint, save_checkpoint
from .network import (
    backward,
    bce_loss,
    forward,
    head_param_count,
    init_params,
)
from .training import (
    EpochStats,
    TrainConfig,
    TrainHistory,
    predict,
    train,
)

__all__ = [
    "AdamState",
    "EpochStats",
    "TrainConfig",
    "TrainHistory",
    "adam_step",
    "backward",
    "bce_loss",
    "forward",
    "head_param_count",
    "init_adam",
    "init_params",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "train",
]
