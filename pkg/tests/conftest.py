"""Shared test helpers: seeded synthetic photographs and tiny corpora.

The synthetic "photograph" is a smooth multi-frequency color field with a
little sensor-style noise. Smoothness matters: it keeps the 95-quality
JPEG round trip nearly idempotent, which is what the splice-salience
oracle relies on.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from elanet.prng import make_rng


def natural_image(seed: int, height: int = 192, width: int = 192, noise_amp: float = 2.5) -> np.ndarray:
    rng = make_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.zeros((height, width, 3))
    for c in range(3):
        f1, f2 = rng.uniform(20, 60), rng.uniform(20, 60)
        p1, p2 = rng.uniform(0, 6.3), rng.uniform(0, 6.3)
        img[..., c] = (
            128
            + 55 * np.sin(xx / f1 + p1) * np.cos(yy / f2 + p2)
            + 30 * np.sin((xx + yy) / rng.uniform(30, 80))
        )
    img += rng.normal(0, noise_amp, (height, width, 3))
    return np.clip(img, 0, 255).astype(np.uint8)


def png_bytes(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: np.ndarray, path: Path) -> Path:
    path.write_bytes(png_bytes(img))
    return path


def jpeg_bytes(img: np.ndarray, quality: int = 95) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(buf, format="JPEG", quality=quality, subsampling=2)
    return buf.getvalue()


def build_corpus(
    root: Path,
    n_per_class: int = 4,
    size: int = 96,
    seed: int = 0,
    donor_quality: int = 60,
) -> Path:
    """Small Au/Tp corpus: recompressed naturals vs synthetic splices."""
    from elanet import dataset, ela

    au = root / "Au"
    tp = root / "Tp"
    au.mkdir(parents=True)
    tp.mkdir(parents=True)
    rect_side = max(16, size // 3)
    for i in range(n_per_class):
        base = natural_image(seed + i, size, size)
        save_png(ela.recompress(base, 95), au / f"au_{i:03d}.png")
        base = natural_image(seed + 1000 + i, size, size)
        rng = make_rng(seed + 2000 + i)
        x = int(rng.integers(4, size - rect_side - 4))
        y = int(rng.integers(4, size - rect_side - 4))
        spliced = dataset.synth_splice(
            base,
            rect=(x, y, rect_side, rect_side),
            donor_quality=donor_quality,
            base_quality=95,
            seed=seed + 3000 + i,
        )
        save_png(spliced, tp / f"tp_{i:03d}.png")
    return root


@pytest.fixture
def tiny_corpus(tmp_path: Path) -> Path:
    return build_corpus(tmp_path / "corpus", n_per_class=4, size=96, seed=11)
