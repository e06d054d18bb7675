"""Fine-tuning runs that export CSVs in the primary pipeline's formats.

History CSV: ``epoch,train_loss,train_acc,val_loss,val_acc``, six decimal
places, header only when no epochs ran. Predictions CSV:
``path,label,p_authentic,p_tampered``, nine decimal places. Both parse in
the primary evaluator unchanged.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backbones import BackboneSpec, ParamCounts, build_model
from .preprocessing import Manifest, load_manifest, load_split

HISTORY_HEADER = "epoch,train_loss,train_acc,val_loss,val_acc"
PREDICTIONS_HEADER = "path,label,p_authentic,p_tampered"


@dataclass
class FineTuneResult:
    counts: ParamCounts
    history_csv: str
    predictions_csv: str


def _history_csv(history) -> str:
    lines = [HISTORY_HEADER]
    if history is not None:
        h = history.history
        for i in range(len(h["loss"])):
            lines.append(
                f"{i + 1},{h['loss'][i]:.6f},{h['accuracy'][i]:.6f},"
                f"{h['val_loss'][i]:.6f},{h['val_accuracy'][i]:.6f}"
            )
    return "\n".join(lines) + "\n"


def _predictions_csv(paths, labels, probs) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PREDICTIONS_HEADER.split(","))
    for path, label, (pa, pt) in zip(paths, labels, probs):
        writer.writerow([path, int(label), f"{pa:.9f}", f"{pt:.9f}"])
    return buf.getvalue()


def fine_tune(
    spec: BackboneSpec,
    manifest: Manifest | str | Path,
    epochs: int = 0,
    batch_size: int = 8,
    learning_rate: float = 1e-4,
    weights: str | None = None,
    freeze_base: bool = False,
    predict_split: str = "val",
    seed: int | None = None,
) -> FineTuneResult:
    """Build the backbone, optionally train, and export the two CSVs.

    With ``epochs=0`` the predictions come straight from the (optionally
    pretrained) base features through the randomly initialized head.
    """
    import tensorflow as tf
    from tensorflow import keras

    if not isinstance(manifest, Manifest):
        manifest = load_manifest(manifest)
    if seed is None:
        seed = manifest.seed
    keras.utils.set_random_seed(seed)

    model, counts = build_model(spec, weights=weights, freeze_base=freeze_base)
    history = None
    if epochs > 0:
        x_train, y_train, _ = load_split(manifest, "train", spec.native_size)
        x_val, y_val, _ = load_split(manifest, "val", spec.native_size)
        model.compile(
            optimizer=keras.optimizers.Adam(learning_rate=learning_rate),
            loss="categorical_crossentropy",
            metrics=["accuracy"],
        )
        history = model.fit(
            x_train,
            y_train,
            validation_data=(x_val, y_val),
            epochs=epochs,
            batch_size=batch_size,
            shuffle=True,
            verbose=0,
        )

    x_pred, y_pred, paths = load_split(manifest, predict_split, spec.native_size)
    probs = model.predict(x_pred, batch_size=batch_size, verbose=0).astype(np.float64)
    # Guard against float32 drift: rows must sum to 1 for the evaluator.
    probs = np.clip(probs, 0.0, 1.0)
    probs /= probs.sum(axis=1, keepdims=True)
    labels = np.argmax(y_pred, axis=1)
    del tf
    return FineTuneResult(
        counts=counts,
        history_csv=_history_csv(history),
        predictions_csv=_predictions_csv(paths, labels, probs),
    )
