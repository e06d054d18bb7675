"""Error Level Analysis forgery detection.

ELA map computation, a CASIA-style corpus pipeline with deterministic
splits, a from-scratch CNN classifier (GAP -> 1024-ReLU -> 2-softmax head,
Adam, binary cross-entropy) and a binary-classification metrics battery.
"""

__version__ = "0.1.0"

from . import dataset, ela, errors, metrics, nn  # noqa: F401
