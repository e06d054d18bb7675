"""Error Level Analysis core.

ELA re-saves an image as JPEG at a controlled quality and measures the
per-pixel absolute difference against the source. Regions whose compression
history differs from the rest of the image (pasted content, for example)
leave a distinct error level and stand out bright once the map is rescaled.

Reproducibility decisions pinned here for the whole repository:

* codec: Pillow's bundled libjpeg (libjpeg quality-scaling convention),
  baseline encoding, identity reported by :func:`codec_id`;
* chroma subsampling: 4:2:0;
* color space: differences taken per channel in RGB after decode;
* rescaling in :func:`enhance_ela`: round-half-up.

All operations are pure functions of their inputs and safe to call from
multiple threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import PIL
from PIL import Image, UnidentifiedImageError, features

from .errors import (
    CorruptFile,
    EncodeFailure,
    ImageTooSmall,
    ShapeMismatch,
    UnsupportedFormat,
)
from .fileio import atomic_write_bytes, atomic_write_text

DEFAULT_QUALITY = 95
MIN_SIDE = 8

# JPEG baseline; MPO is the multi-picture JPEG container some cameras emit.
_SUPPORTED_FORMATS = {"JPEG", "MPO", "PNG", "TIFF", "BMP"}

# 4:2:0 in Pillow's subsampling encoding.
_CHROMA_420 = 2


@dataclass(frozen=True)
class ElaMap:
    """Per-pixel, per-channel absolute recompression error.

    ``data`` is a (height, width, 3) uint8 array where each sample is
    ``|original - recompressed|``; ``max_error`` is the maximum sample (0 iff
    the map is all zeros); ``quality`` is the JPEG quality used for the
    round trip.
    """

    data: np.ndarray
    quality: int
    max_error: int

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def codec_id() -> str:
    """Identity string of the pinned JPEG codec, recorded in output headers."""
    jpg = features.version("jpg") or "unknown"
    turbo = "-turbo" if features.check_feature("libjpeg_turbo") else ""
    return f"Pillow {PIL.__version__} libjpeg{turbo} {jpg} subsampling=4:2:0"


def check_quality(quality: int) -> int:
    """Validate a JPEG quality value (integer in [1, 100])."""
    if not isinstance(quality, (int, np.integer)) or isinstance(quality, bool):
        raise ValueError(f"quality must be an integer, got {quality!r}")
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    return int(quality)


def check_raster(img: np.ndarray) -> np.ndarray:
    """Validate the raster convention: (H, W, 3) uint8, both sides >= 8."""
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise ShapeMismatch(f"expected (H, W, 3) array, got shape {getattr(img, 'shape', None)}")
    if img.dtype != np.uint8:
        raise ShapeMismatch(f"expected uint8 samples, got {img.dtype}")
    if img.shape[0] < MIN_SIDE or img.shape[1] < MIN_SIDE:
        raise ImageTooSmall(f"image is {img.shape[1]}x{img.shape[0]}, minimum side is {MIN_SIDE}")
    return img


def decode_image(data: bytes) -> np.ndarray:
    """Decode an encoded JPEG/PNG/TIFF/BMP byte stream to 8-bit RGB.

    Grayscale and paletted inputs are expanded to RGB, alpha is dropped and
    16-bit samples are reduced to 8 bits by taking the high byte (the same
    convention as common reference decoders).
    """
    try:
        im = Image.open(io.BytesIO(data))
    except UnidentifiedImageError as exc:
        raise CorruptFile(f"cannot identify image data: {exc}") from exc
    except OSError as exc:
        # Truncation inside a header segment surfaces from open(), not load().
        raise CorruptFile(f"failed to parse image header: {exc}") from exc
    if im.format not in _SUPPORTED_FORMATS:
        raise UnsupportedFormat(f"unsupported format {im.format!r} (need JPEG/PNG/TIFF/BMP)")
    try:
        im.load()
    except OSError as exc:
        raise CorruptFile(f"failed to decode {im.format} stream: {exc}") from exc

    if im.mode.startswith("I;16") or im.mode == "I":
        arr = np.asarray(im)
        arr = np.clip(arr >> 8, 0, 255).astype(np.uint8)
        rgb = np.stack([arr, arr, arr], axis=-1)
    else:
        if im.mode != "RGB":
            im = im.convert("RGB")
        rgb = np.asarray(im, dtype=np.uint8)

    if rgb.shape[0] < MIN_SIDE or rgb.shape[1] < MIN_SIDE:
        raise ImageTooSmall(
            f"image is {rgb.shape[1]}x{rgb.shape[0]}, minimum side is {MIN_SIDE}"
        )
    return rgb


def load_image(path: str | Path) -> np.ndarray:
    """Read a file and decode it via :func:`decode_image`."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CorruptFile(f"cannot read {path}: {exc}") from exc
    return decode_image(data)


def encode_jpeg(img: np.ndarray, quality: int = DEFAULT_QUALITY) -> bytes:
    """Encode an RGB raster as a baseline JPEG byte stream.

    Deterministic for fixed (img, quality): same inputs give byte-identical
    output. Chroma subsampling is pinned to 4:2:0.
    """
    check_raster(img)
    q = check_quality(quality)
    buf = io.BytesIO()
    try:
        Image.fromarray(img, mode="RGB").save(buf, format="JPEG", quality=q, subsampling=_CHROMA_420)
    except OSError as exc:
        raise EncodeFailure(f"JPEG encode failed: {exc}") from exc
    return buf.getvalue()


def recompress(img: np.ndarray, quality: int = DEFAULT_QUALITY) -> np.ndarray:
    """JPEG round trip: decode(encode_jpeg(img, quality)). Dimensions preserved."""
    out = decode_image(encode_jpeg(img, quality))
    if out.shape != img.shape:
        raise EncodeFailure(f"codec changed dimensions: {img.shape} -> {out.shape}")
    return out


def compute_ela(img: np.ndarray, quality: int = DEFAULT_QUALITY) -> ElaMap:
    """Compute the ELA map of ``img`` at ``quality``.

    Each sample is the absolute difference between the source and its JPEG
    round trip, taken per RGB channel.
    """
    check_raster(img)
    rec = recompress(img, quality)
    diff = np.abs(img.astype(np.int16) - rec.astype(np.int16)).astype(np.uint8)
    return ElaMap(data=diff, quality=check_quality(quality), max_error=int(diff.max()))


def enhance_ela(ela: ElaMap) -> np.ndarray:
    """Rescale an ELA map so its largest error maps to 255.

    Each sample is multiplied by ``255 / max(max_error, 1)`` and rounded
    half-up, saturating at 255. An all-zero map stays all zeros. The mapping
    is monotone, so sample ordering (and the argmax location) is preserved.
    """
    scale = 255.0 / max(ela.max_error, 1)
    out = np.floor(ela.data.astype(np.float64) * scale + 0.5)
    return np.clip(out, 0, 255).astype(np.uint8)


def save_ela_png(
    ela: ElaMap,
    out_path: str | Path,
    source: str | Path,
    enhance: bool = True,
) -> Path:
    """Write an ELA map as a lossless PNG plus a sidecar text header.

    PNG (never JPEG) so the stored map carries no extra compression error.
    The sidecar ``<out_path>.txt`` records source path, quality, codec id
    and max_error. Returns the sidecar path.
    """
    out_path = Path(out_path)
    data = enhance_ela(ela) if enhance else ela.data
    buf = io.BytesIO()
    Image.fromarray(data, mode="RGB").save(buf, format="PNG")
    atomic_write_bytes(out_path, buf.getvalue())
    sidecar = out_path.with_name(out_path.name + ".txt")
    atomic_write_text(
        sidecar,
        f"source={source}\n"
        f"quality={ela.quality}\n"
        f"codec={codec_id()}\n"
        f"max_error={ela.max_error}\n"
        f"enhanced={str(enhance).lower()}\n",
    )
    return sidecar
