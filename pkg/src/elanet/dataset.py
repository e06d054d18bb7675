"""Corpus ingestion, deterministic splits, preprocessing, splice synthesis.

Understands the common two-class layout (``Au/`` authentic, ``Tp/``
tampered), produces stratified train/val/test splits that are byte-identical
for a fixed seed, converts images into fixed-size ELA tensors for the
classifier, and synthesizes spliced images with a controlled recompression
gap for oracle testing.

Convention used throughout the repository: Tampered is the positive class,
index 1.

Scanning and preprocessing are pure functions of the file bytes and
settings, safe to parallelize per record; manifest files have a single
writer.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path

import numpy as np

from . import ela
from .errors import (
    ElanetError,
    EmptyCorpus,
    MissingDirectory,
    RectOutOfBounds,
    TooFewExamples,
)
from .prng import make_rng

logger = logging.getLogger(__name__)

MIN_SPLICE_SIDE = 16
MIN_CLASS_RECORDS = 3


class Label(IntEnum):
    AUTHENTIC = 0
    TAMPERED = 1


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class ImageRecord:
    path: str
    label: Label
    split: Split


@dataclass(frozen=True)
class CorpusLayout:
    """Directory naming rule: one subdirectory per class."""

    authentic_dir: str = "Au"
    tampered_dir: str = "Tp"


@dataclass
class DatasetManifest:
    """Labeled, split-assigned image records plus the preprocessing settings.

    The settings (seed, quality, target size, enhancement) ride along so
    downstream consumers preprocess exactly as the split was defined.
    """

    records: list[ImageRecord] = field(default_factory=list)
    seed: int = 42
    quality: int = ela.DEFAULT_QUALITY
    target_size: tuple[int, int] = (128, 128)  # (width, height)
    enhance: bool = True

    def split_records(self, split: Split) -> list[ImageRecord]:
        return [r for r in self.records if r.split is split]

    def save(self, path: str | Path) -> None:
        """Write the manifest CSV: commented settings preamble, then
        ``path,label,split`` rows (label 0/1, split train/val/test)."""
        w, h = self.target_size
        lines = [
            f"# seed={self.seed}",
            f"# quality={self.quality}",
            f"# size={w}x{h}",
            f"# enhance={str(self.enhance).lower()}",
            "# resize=bilinear",
        ]
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
            writer = csv.writer(fh)
            writer.writerow(["path", "label", "split"])
            for rec in self.records:
                writer.writerow([rec.path, int(rec.label), rec.split.value])

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        settings: dict[str, str] = {}
        rows: list[list[str]] = []
        with Path(path).open("r", encoding="utf-8", newline="") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#"):
                    key, _, value = line.lstrip("# ").partition("=")
                    settings[key.strip()] = value.strip()
                elif line:
                    rows.append(next(csv.reader([line])))
        if not rows or rows[0] != ["path", "label", "split"]:
            raise ElanetError(f"{path}: missing manifest header 'path,label,split'")
        records = [
            ImageRecord(path=r[0], label=Label(int(r[1])), split=Split(r[2]))
            for r in rows[1:]
        ]
        w, h = settings.get("size", "128x128").split("x")
        return cls(
            records=records,
            seed=int(settings.get("seed", "42")),
            quality=int(settings.get("quality", str(ela.DEFAULT_QUALITY))),
            target_size=(int(w), int(h)),
            enhance=settings.get("enhance", "true") == "true",
        )


@dataclass(frozen=True)
class ExampleTensor:
    """Preprocessed input: (target_h, target_w, 3) values in [0, 1] plus a
    one-hot (authentic, tampered) label."""

    data: np.ndarray
    label: np.ndarray


def scan_corpus(
    root: str | Path, layout: CorpusLayout = CorpusLayout()
) -> list[tuple[str, Label]]:
    """List every decodable image under the class directories.

    Returns (path, label) pairs in lexicographic path order. Undecodable
    files are skipped and logged.
    """
    root = Path(root)
    class_dirs = (
        (root / layout.authentic_dir, Label.AUTHENTIC),
        (root / layout.tampered_dir, Label.TAMPERED),
    )
    for class_dir, _ in class_dirs:
        if not class_dir.is_dir():
            raise MissingDirectory(f"missing class directory {class_dir}")
    found: list[tuple[str, Label]] = []
    for class_dir, label in class_dirs:
        kept = 0
        for p in sorted(class_dir.rglob("*")):
            if not p.is_file():
                continue
            try:
                ela.load_image(p)
            except ElanetError as exc:
                logger.warning("skipping undecodable file %s: %s", p, exc)
                continue
            found.append((str(p), label))
            kept += 1
        if kept == 0:
            raise EmptyCorpus(f"no decodable images under {class_dir}")
    found.sort(key=lambda item: item[0])
    return found


def _allocate(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder apportionment of n records over three splits.

    Ties in remainder break toward the earlier split (train, val, test).
    """
    exact = [n * r for r in ratios]
    counts = [math.floor(e) for e in exact]
    leftovers = n - sum(counts)
    order = sorted(range(3), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in range(leftovers):
        counts[order[i]] += 1
    return counts


def split_manifest(
    records: list[tuple[str, Label]],
    ratios: tuple[float, float, float],
    seed: int,
    quality: int = ela.DEFAULT_QUALITY,
    target_size: tuple[int, int] = (128, 128),
    enhance: bool = True,
) -> DatasetManifest:
    """Assign records to train/val/test, stratified by label.

    Shuffles each class with Philox keyed by ``seed`` (class 0 first, then
    class 1) and apportions counts by largest remainder, so the same inputs
    always produce the same manifest bytes.
    """
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be non-negative and sum to 1, got {ratios}")
    rng = make_rng(seed)
    assigned: dict[str, Split] = {}
    for label in (Label.AUTHENTIC, Label.TAMPERED):
        paths = [p for p, lab in records if lab is label]
        if len(paths) < MIN_CLASS_RECORDS:
            raise TooFewExamples(
                f"class {label.name} has {len(paths)} records, need >= {MIN_CLASS_RECORDS}"
            )
        counts = _allocate(len(paths), ratios)
        if counts[0] == 0:
            raise TooFewExamples(
                f"train ratio {ratios[0]} leaves class {label.name} without training records"
            )
        perm = rng.permutation(len(paths))
        shuffled = [paths[i] for i in perm]
        bounds = (counts[0], counts[0] + counts[1])
        for i, p in enumerate(shuffled):
            if i < bounds[0]:
                assigned[p] = Split.TRAIN
            elif i < bounds[1]:
                assigned[p] = Split.VAL
            else:
                assigned[p] = Split.TEST
    recs = [ImageRecord(path=p, label=lab, split=assigned[p]) for p, lab in records]
    return DatasetManifest(
        records=recs, seed=seed, quality=quality, target_size=target_size, enhance=enhance
    )


def bilinear_resize(img: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Plain bilinear resample to (width, height), half-pixel centers.

    Destination pixel (x, y) samples the source at
    ``((x + 0.5) * sw/dw - 0.5, (y + 0.5) * sh/dh - 0.5)`` with edge clamp.
    Input may be any float or integer array of shape (H, W, C); output is
    float64 (no rounding back to integers).
    """
    dst_w, dst_h = size
    src_h, src_w = img.shape[:2]
    x = (np.arange(dst_w) + 0.5) * (src_w / dst_w) - 0.5
    y = (np.arange(dst_h) + 0.5) * (src_h / dst_h) - 0.5
    x0 = np.clip(np.floor(x).astype(int), 0, src_w - 1)
    y0 = np.clip(np.floor(y).astype(int), 0, src_h - 1)
    x1 = np.minimum(x0 + 1, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    fx = np.clip(x - x0, 0.0, 1.0)[None, :, None]
    fy = np.clip(y - y0, 0.0, 1.0)[:, None, None]
    im = img.astype(np.float64)
    top = im[y0][:, x0] * (1 - fx) + im[y0][:, x1] * fx
    bot = im[y1][:, x0] * (1 - fx) + im[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def preprocess(
    record: ImageRecord | str | Path,
    manifest: DatasetManifest,
    dtype: np.dtype = np.float32,
) -> ExampleTensor:
    """Turn one record into a classifier input tensor.

    Pipeline: ELA at the manifest quality, optional enhancement, bilinear
    resize to the target size, then division by 255. ELA runs before the
    resize: resampling first would smear the block-aligned compression
    artifacts the map measures.
    """
    if isinstance(record, ImageRecord):
        path, label = record.path, record.label
    else:
        path, label = record, Label.AUTHENTIC
    img = ela.load_image(path)
    emap = ela.compute_ela(img, manifest.quality)
    data = ela.enhance_ela(emap) if manifest.enhance else emap.data
    resized = bilinear_resize(data, manifest.target_size) / 255.0
    onehot = np.zeros(2, dtype=dtype)
    onehot[int(label)] = 1
    return ExampleTensor(data=resized.astype(dtype), label=onehot)


def synth_splice(
    base: np.ndarray,
    rect: tuple[int, int, int, int],
    donor_quality: int,
    base_quality: int = ela.DEFAULT_QUALITY,
    seed: int = 0,
    max_offset: int = 2,
) -> np.ndarray:
    """Build a synthetic splice with a controlled recompression gap.

    The base is recompressed at ``base_quality``; inside ``rect`` the same
    content recompressed at ``donor_quality`` is pasted instead, shifted by
    a seeded random offset of up to ``max_offset`` pixels so the donor's
    8x8 block grid no longer lines up. Callers must save the result
    losslessly (PNG), or the splice signature is destroyed.
    """
    ela.check_raster(base)
    x, y, w, h = rect
    img_h, img_w = base.shape[:2]
    if w < MIN_SPLICE_SIDE or h < MIN_SPLICE_SIDE:
        raise RectOutOfBounds(f"splice rect must be at least {MIN_SPLICE_SIDE}px per side, got {w}x{h}")
    if x < 0 or y < 0 or x + w > img_w or y + h > img_h:
        raise RectOutOfBounds(f"rect {rect} exceeds image bounds {img_w}x{img_h}")
    rng = make_rng(seed)
    dx = int(rng.integers(-max_offset, max_offset + 1)) if max_offset > 0 else 0
    dy = int(rng.integers(-max_offset, max_offset + 1)) if max_offset > 0 else 0
    # Clamp the donor window so the shifted source stays inside the image.
    sx = min(max(x + dx, 0), img_w - w)
    sy = min(max(y + dy, 0), img_h - h)
    rebased = ela.recompress(base, base_quality)
    donor = ela.recompress(base, donor_quality)
    out = rebased.copy()
    out[y : y + h, x : x + w] = donor[sy : sy + h, sx : sx + w]
    return out
