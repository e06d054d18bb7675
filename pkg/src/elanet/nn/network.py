"""Compact CNN assembly: conv blocks feeding a GAP -> 1024-ReLU -> 2-softmax
head, trained with two-class cross-entropy (algebraically identical to
binary cross-entropy on the tampered probability).

Parameters live in an ordered dict keyed ``conv{i}/kernel``,
``conv{i}/bias``, ``fc1/weight``, ``fc1/bias``, ``fc2/weight``,
``fc2/bias``. The architecture is fully determined by those shapes, so a
checkpoint's layer manifest is enough to rebuild the forward pass.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ShapeMismatch, StaleCache
from ..prng import make_rng
from . import layers

Params = dict[str, np.ndarray]

# Set ELANET_DEBUG_CHECKS=1 to assert that no op produces NaN/Inf; off by
# default because the finiteness scan costs a pass over every tensor.
DEBUG_CHECKS = os.environ.get("ELANET_DEBUG_CHECKS", "") == "1"


def _check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    if DEBUG_CHECKS and not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {name}")
    return arr

PROB_CLAMP = 1e-12
DEFAULT_CONV_CHANNELS = (16, 32, 64)
HIDDEN_UNITS = 1024
NUM_CLASSES = 2
KERNEL_SIZE = 3


def head_param_count(c_feat: int) -> int:
    """Trainable parameters of the GAP -> 1024-ReLU -> 2-softmax head for a
    feature width of ``c_feat`` (GAP itself has none)."""
    if c_feat < 1:
        raise ValueError(f"c_feat must be >= 1, got {c_feat}")
    return c_feat * HIDDEN_UNITS + HIDDEN_UNITS + HIDDEN_UNITS * NUM_CLASSES + NUM_CLASSES


def init_params(
    seed: int,
    in_channels: int = 3,
    conv_channels: tuple[int, ...] = DEFAULT_CONV_CHANNELS,
    hidden: int = HIDDEN_UNITS,
    dtype=np.float32,
) -> Params:
    """Seeded initialization: He-uniform for conv and the ReLU dense layer,
    Glorot-uniform for the softmax layer, zero biases.

    Draw order is fixed (conv1..convN, fc1, fc2) from one Philox stream, so
    a seed pins every weight.
    """
    rng = make_rng(seed)
    params: Params = {}
    c_in = in_channels
    for i, c_out in enumerate(conv_channels, start=1):
        fan_in = KERNEL_SIZE * KERNEL_SIZE * c_in
        limit = np.sqrt(6.0 / fan_in)
        params[f"conv{i}/kernel"] = rng.uniform(
            -limit, limit, size=(KERNEL_SIZE, KERNEL_SIZE, c_in, c_out)
        ).astype(dtype)
        params[f"conv{i}/bias"] = np.zeros(c_out, dtype=dtype)
        c_in = c_out
    limit = np.sqrt(6.0 / c_in)
    params["fc1/weight"] = rng.uniform(-limit, limit, size=(c_in, hidden)).astype(dtype)
    params["fc1/bias"] = np.zeros(hidden, dtype=dtype)
    limit = np.sqrt(6.0 / (hidden + NUM_CLASSES))
    params["fc2/weight"] = rng.uniform(-limit, limit, size=(hidden, NUM_CLASSES)).astype(dtype)
    params["fc2/bias"] = np.zeros(NUM_CLASSES, dtype=dtype)
    return params


def conv_layer_names(params: Params) -> list[str]:
    names = sorted(
        {k.split("/")[0] for k in params if k.startswith("conv")},
        key=lambda s: int(s[4:]),
    )
    expected = [f"conv{i}" for i in range(1, len(names) + 1)]
    if names != expected:
        raise ShapeMismatch(f"conv layers must be conv1..convN, got {names}")
    return names


def forward(params: Params, batch: np.ndarray):
    """Full forward pass.

    batch: (N, H, W, C) with C matching conv1's input channels and enough
    spatial extent to survive one 2x2 pool per conv block. Returns
    (probs, cache) where each probs row is a softmax pair summing to 1.
    """
    if batch.ndim != 4:
        raise ShapeMismatch(f"batch must be (N, H, W, C), got {getattr(batch, 'shape', None)}")
    cache: dict[str, object] = {"batch_shape": batch.shape}
    x = batch
    for name in conv_layer_names(params):
        x, cache[f"{name}/conv"] = layers.conv2d_forward(
            x, params[f"{name}/kernel"], params[f"{name}/bias"]
        )
        _check_finite(f"{name} output", x)
        x, cache[f"{name}/relu"] = layers.relu_forward(x)
        if min(x.shape[1], x.shape[2]) < 2:
            raise ShapeMismatch(f"spatial size {x.shape[1]}x{x.shape[2]} too small to pool")
        x, cache[f"{name}/pool"] = layers.maxpool2_forward(x)
    x, cache["gap"] = layers.gap_forward(x)
    x, cache["fc1"] = layers.dense_forward(x, params["fc1/weight"], params["fc1/bias"])
    _check_finite("fc1 output", x)
    x, cache["fc1/relu"] = layers.relu_forward(x)
    logits, cache["fc2"] = layers.dense_forward(x, params["fc2/weight"], params["fc2/bias"])
    probs = layers.softmax(_check_finite("logits", logits))
    return probs, cache


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-probability of the true class.

    The true-class probability is clamped to [1e-12, 1] before the log.
    """
    if probs.shape != labels.shape or probs.ndim != 2:
        raise ShapeMismatch(f"probs {probs.shape} vs labels {labels.shape}")
    p_true = np.clip((probs * labels).sum(axis=1), PROB_CLAMP, 1.0)
    return float(np.mean(-np.log(p_true)))


def backward(params: Params, cache, probs: np.ndarray, labels: np.ndarray) -> Params:
    """Analytic gradients of ``bce_loss(forward(...))`` w.r.t. every parameter.

    Softmax and cross-entropy combine into dlogits = (probs - labels) / N.
    """
    batch_shape = cache.get("batch_shape")
    if batch_shape is None or probs.shape != labels.shape or probs.shape[0] != batch_shape[0]:
        raise StaleCache("cache does not match the given probs/labels batch")
    for name in conv_layer_names(params):
        cached_kshape = cache[f"{name}/conv"][2]
        if params[f"{name}/kernel"].shape != cached_kshape:
            raise StaleCache(f"{name}: cache built for kernel {cached_kshape}")
    n = probs.shape[0]
    grads: Params = {}
    dlogits = (probs - labels).astype(probs.dtype) / n
    dx, grads["fc2/weight"], grads["fc2/bias"] = layers.dense_backward(
        dlogits, cache["fc2"], params["fc2/weight"]
    )
    dx = layers.relu_backward(dx, cache["fc1/relu"])
    dx, grads["fc1/weight"], grads["fc1/bias"] = layers.dense_backward(
        dx, cache["fc1"], params["fc1/weight"]
    )
    dx = layers.gap_backward(dx, cache["gap"])
    for name in reversed(conv_layer_names(params)):
        dx = layers.maxpool2_backward(dx, cache[f"{name}/pool"])
        dx = layers.relu_backward(dx, cache[f"{name}/relu"])
        dx, grads[f"{name}/kernel"], grads[f"{name}/bias"] = layers.conv2d_backward(
            dx, cache[f"{name}/conv"], params[f"{name}/kernel"]
        )
    for key, g in grads.items():
        _check_finite(f"grad {key}", g)
    return {k: grads[k] for k in params}
