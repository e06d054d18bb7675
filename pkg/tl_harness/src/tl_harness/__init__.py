"""Transfer-learning harness for the ELA forgery classifier.

Rebuilds five pretrained image-classification backbones with the same
two-layer head the from-scratch classifier uses (global average pooling,
1024-unit ReLU dense, 2-unit softmax), verifies their exact parameter
counts, and exports history and prediction CSVs in the primary package's
file formats. The primary package is consumed only through those formats;
nothing here imports it.
"""

__version__ = "0.1.0"

from .backbones import BACKBONES, BackboneSpec, ParamCounts, build_model, head_param_count
from .finetune import fine_tune

__all__ = [
    "BACKBONES",
    "BackboneSpec",
    "ParamCounts",
    "build_model",
    "fine_tune",
    "head_param_count",
]
