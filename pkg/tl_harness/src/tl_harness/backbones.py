"""Backbone registry and model assembly with parameter-count verification.

Each spec pins the published totals for its backbone once the output layer
is replaced by global average pooling, a 1024-unit ReLU dense layer and a
2-unit softmax. ``build_model`` fails loudly (CountMismatch) if the
constructed model does not reproduce them exactly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")

HIDDEN_UNITS = 1024
NUM_CLASSES = 2


class CountMismatch(RuntimeError):
    """Constructed model disagrees with the published parameter counts."""


def head_param_count(c_feat: int) -> int:
    """Parameters of the GAP -> 1024-ReLU -> 2-softmax head.

    Same closed form the primary classifier publishes; duplicated here so
    the two packages can be checked for integer equality across the
    package boundary without importing each other.
    """
    return c_feat * HIDDEN_UNITS + HIDDEN_UNITS + HIDDEN_UNITS * NUM_CLASSES + NUM_CLASSES


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    builder_name: str
    native_size: int
    feature_width: int
    expected_total: int
    expected_base: int
    expected_nontrainable: int | None = None  # published only for some models

    def __post_init__(self):
        assert self.expected_total == self.expected_base + head_param_count(self.feature_width)


BACKBONES: dict[str, BackboneSpec] = {
    spec.name: spec
    for spec in [
        BackboneSpec("vgg19", "VGG19", 224, 512, 20_551_746, 20_024_384),
        BackboneSpec("inception_v3", "InceptionV3", 299, 2048, 23_903_010, 21_802_784, 34_432),
        BackboneSpec("resnet152_v2", "ResNet152V2", 224, 2048, 60_431_874, 58_331_648),
        BackboneSpec("xception", "Xception", 299, 2048, 22_961_706, 20_861_480, 54_528),
        BackboneSpec(
            "efficientnet_v2l", "EfficientNetV2L", 480, 1280, 119_060_642, 117_746_848
        ),
    ]
}


@dataclass(frozen=True)
class ParamCounts:
    total: int
    trainable: int
    non_trainable: int
    base_total: int


def _weight_count(weights) -> int:
    return int(sum(math.prod(w.shape) for w in weights))


def build_model(
    spec: BackboneSpec,
    weights: str | None = None,
    freeze_base: bool = False,
):
    """Build the backbone with the custom head.

    ``weights='imagenet'`` loads the pretrained base (needs the weight
    files locally or a network path to them); ``None`` keeps the published
    architecture with random init, which leaves every count unchanged.
    Returns (model, ParamCounts). Raises CountMismatch when the totals
    disagree with the spec.
    """
    from tensorflow import keras

    builder = getattr(keras.applications, spec.builder_name)
    base = builder(
        weights=weights,
        include_top=False,
        input_shape=(spec.native_size, spec.native_size, 3),
    )
    base.trainable = not freeze_base
    x = keras.layers.GlobalAveragePooling2D(name="head_gap")(base.output)
    x = keras.layers.Dense(HIDDEN_UNITS, activation="relu", name="head_dense")(x)
    out = keras.layers.Dense(NUM_CLASSES, activation="softmax", name="head_softmax")(x)
    model = keras.Model(base.input, out, name=f"{spec.name}_ela")

    base_total = base.count_params()
    trainable = _weight_count(model.trainable_weights)
    non_trainable = _weight_count(model.non_trainable_weights)
    counts = ParamCounts(
        total=trainable + non_trainable,
        trainable=trainable,
        non_trainable=non_trainable,
        base_total=base_total,
    )
    if counts.total != spec.expected_total:
        raise CountMismatch(
            f"{spec.name}: total {counts.total:,} != expected {spec.expected_total:,}"
        )
    if counts.base_total != spec.expected_base:
        raise CountMismatch(
            f"{spec.name}: base {counts.base_total:,} != expected {spec.expected_base:,}"
        )
    if (
        not freeze_base
        and spec.expected_nontrainable is not None
        and counts.non_trainable != spec.expected_nontrainable
    ):
        raise CountMismatch(
            f"{spec.name}: non-trainable {counts.non_trainable:,} != "
            f"expected {spec.expected_nontrainable:,}"
        )
    return model, counts
