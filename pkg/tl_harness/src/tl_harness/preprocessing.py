"""Manifest consumption and ELA preprocessing.

Reads the split manifest CSV produced by the primary pipeline (commented
settings preamble, then ``path,label,split`` rows) and rebuilds the same
preprocessing: JPEG round trip at the manifest quality with 4:2:0 chroma
subsampling, per-channel absolute difference, optional rescale of the
largest error to 255 (round-half-up), bilinear resize to the backbone's
native input size, division by 255.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class ManifestRow:
    path: str
    label: int
    split: str


@dataclass
class Manifest:
    rows: list[ManifestRow]
    seed: int
    quality: int
    enhance: bool

    def split_rows(self, split: str) -> list[ManifestRow]:
        return [r for r in self.rows if r.split == split]


def load_manifest(path: str | Path) -> Manifest:
    settings: dict[str, str] = {}
    data_rows: list[list[str]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line.lstrip("# ").partition("=")
            settings[key.strip()] = value.strip()
        elif line:
            data_rows.append(next(csv.reader([line])))
    if not data_rows or data_rows[0] != ["path", "label", "split"]:
        raise ValueError(f"{path}: expected manifest header 'path,label,split'")
    rows = [ManifestRow(r[0], int(r[1]), r[2]) for r in data_rows[1:]]
    return Manifest(
        rows=rows,
        seed=int(settings.get("seed", "42")),
        quality=int(settings.get("quality", "95")),
        enhance=settings.get("enhance", "true") == "true",
    )


def ela_map(img: Image.Image, quality: int) -> np.ndarray:
    buf = io.BytesIO()
    img.save(buf, format="JPEG", quality=quality, subsampling=2)
    recompressed = Image.open(buf).convert("RGB")
    diff = np.abs(
        np.asarray(img, dtype=np.int16) - np.asarray(recompressed, dtype=np.int16)
    )
    return diff.astype(np.uint8)


def enhance(diff: np.ndarray) -> np.ndarray:
    scale = 255.0 / max(int(diff.max()), 1)
    return np.clip(np.floor(diff.astype(np.float64) * scale + 0.5), 0, 255).astype(np.uint8)


def example_tensor(row: ManifestRow, manifest: Manifest, native_size: int) -> np.ndarray:
    img = Image.open(row.path).convert("RGB")
    diff = ela_map(img, manifest.quality)
    if manifest.enhance:
        diff = enhance(diff)
    import tensorflow as tf

    resized = tf.image.resize(
        diff.astype(np.float32), (native_size, native_size), method="bilinear"
    ).numpy()
    return resized / 255.0


def load_split(manifest: Manifest, split: str, native_size: int):
    rows = manifest.split_rows(split)
    if not rows:
        raise ValueError(f"manifest has no rows in split {split!r}")
    x = np.stack([example_tensor(r, manifest, native_size) for r in rows])
    y = np.eye(2, dtype=np.float32)[[r.label for r in rows]]
    paths = [r.path for r in rows]
    return x, y, paths
