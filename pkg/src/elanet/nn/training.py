"""Minibatch training loop and batch inference.

Deterministic by construction: the seed pins the weight init and every epoch
shuffle, batches run in order and each epoch's metrics are the size-weighted
means over its minibatches (computed on the forward pass that produced the
gradients, before the update). Validation metrics come from a full pass at
the end of each epoch.

Forward/backward on distinct batches are independent and may run
concurrently; the parameter update is single-writer. This loop is
sequential end to end, which is what deterministic mode requires.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import DatasetManifest, Split, preprocess
from ..errors import DivergedLoss, ElanetError
from ..fileio import atomic_write_text
from ..metrics import PredictionSet
from .adam import adam_step, init_adam
from .network import (
    DEFAULT_CONV_CHANNELS,
    HIDDEN_UNITS,
    Params,
    backward,
    bce_loss,
    forward,
    init_params,
)

HISTORY_HEADER = "epoch,train_loss,train_acc,val_loss,val_acc"


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 42
    conv_channels: tuple[int, ...] = DEFAULT_CONV_CHANNELS
    hidden: int = HIDDEN_UNITS
    # Single-threaded, order-deterministic execution. The default loop is
    # already sequential; the flag exists so callers can force it explicitly.
    deterministic: bool = False


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [HISTORY_HEADER]
        for e in self.epochs:
            lines.append(
                f"{e.epoch},{e.train_loss:.6f},{e.train_acc:.6f},{e.val_loss:.6f},{e.val_acc:.6f}"
            )
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        atomic_write_text(path, self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "TrainHistory":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != HISTORY_HEADER:
            raise ElanetError(f"bad history header: {lines[:1]}")
        epochs = []
        for ln in lines[1:]:
            ep, tl, ta, vl, va = ln.split(",")
            epochs.append(EpochStats(int(ep), float(tl), float(ta), float(vl), float(va)))
        return cls(epochs)


def load_split_tensors(
    manifest: DatasetManifest, split: Split, dtype=np.float32
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Preprocess every record of a split into stacked (X, Y, paths)."""
    records = manifest.split_records(split)
    if not records:
        raise ElanetError(f"manifest has no records in split {split.value!r}")
    xs, ys, paths = [], [], []
    for rec in records:
        ex = preprocess(rec, manifest, dtype=dtype)
        xs.append(ex.data)
        ys.append(ex.label)
        paths.append(rec.path)
    return np.stack(xs), np.stack(ys), paths


def _accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    # argmax takes the first maximum, so an exact 0.5/0.5 tie counts as
    # class 0 (authentic).
    return float(np.mean(np.argmax(probs, axis=1) == np.argmax(labels, axis=1)))


def _eval_pass(params: Params, x: np.ndarray, y: np.ndarray, batch_size: int):
    total_loss = 0.0
    correct = 0.0
    for start in range(0, len(x), batch_size):
        xb, yb = x[start : start + batch_size], y[start : start + batch_size]
        probs, _ = forward(params, xb)
        total_loss += bce_loss(probs, yb) * len(xb)
        correct += _accuracy(probs, yb) * len(xb)
    return total_loss / len(x), correct / len(x)


def train(manifest: DatasetManifest, config: TrainConfig) -> tuple[Params, TrainHistory]:
    """Train the compact CNN on the manifest's train split.

    Epoch shuffles draw from a Philox stream jumped once past the init
    stream, so weights and batch order are independent but both pinned by
    ``config.seed``. Raises DivergedLoss the moment a batch loss goes
    non-finite.
    """
    x_train, y_train, _ = load_split_tensors(manifest, Split.TRAIN)
    x_val, y_val, _ = load_split_tensors(manifest, Split.VAL)
    params = init_params(
        config.seed, in_channels=3, conv_channels=config.conv_channels, hidden=config.hidden
    )
    state = init_adam(
        params,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
    )
    shuffle_rng = np.random.Generator(np.random.Philox(config.seed).jumped(1))
    history = TrainHistory()
    n = len(x_train)
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        loss_sum = 0.0
        acc_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            probs, cache = forward(params, xb)
            loss = bce_loss(probs, yb)
            if not np.isfinite(loss):
                raise DivergedLoss(
                    f"non-finite loss {loss} at epoch {epoch}, batch {start // config.batch_size}"
                )
            loss_sum += loss * len(xb)
            acc_sum += _accuracy(probs, yb) * len(xb)
            grads = backward(params, cache, probs, yb)
            params, state = adam_step(params, grads, state)
        val_loss, val_acc = _eval_pass(params, x_val, y_val, config.batch_size)
        history.epochs.append(
            EpochStats(
                epoch=epoch,
                train_loss=loss_sum / n,
                train_acc=acc_sum / n,
                val_loss=val_loss,
                val_acc=val_acc,
            )
        )
    return params, history


def predict(
    params: Params, manifest: DatasetManifest, split: Split, batch_size: int = 32
) -> PredictionSet:
    """Forward-pass probabilities for every record in a split."""
    x, y, paths = load_split_tensors(manifest, split)
    probs_parts = []
    for start in range(0, len(x), batch_size):
        probs, _ = forward(params, x[start : start + batch_size])
        probs_parts.append(probs)
    probs = np.concatenate(probs_parts).astype(np.float64)
    labels = np.argmax(y, axis=1)
    return PredictionSet(paths=paths, labels=labels, probs=probs)
