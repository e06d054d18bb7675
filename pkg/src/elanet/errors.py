"""Exception types shared across the package.

Data-level failures derive from :class:`ElanetError`; the CLI maps them to
exit code 2. :class:`DivergedLoss` maps to exit code 3.
"""


class ElanetError(Exception):
    """Base class for data and pipeline errors."""


class UnsupportedFormat(ElanetError):
    """Decodable file, but not one of the supported image formats."""


class CorruptFile(ElanetError):
    """Byte stream cannot be decoded as an image."""


class ImageTooSmall(ElanetError):
    """Either image side is below the 8-pixel minimum (one JPEG block)."""


class EncodeFailure(ElanetError):
    """JPEG codec reported an error while encoding."""


class MissingDirectory(ElanetError):
    """A required class directory is absent from the corpus root."""


class EmptyCorpus(ElanetError):
    """A class directory contains no decodable images."""


class TooFewExamples(ElanetError):
    """A class has too few records to split (minimum 3)."""


class RectOutOfBounds(ElanetError):
    """Splice rectangle violates image bounds or the minimum size."""


class ShapeMismatch(ElanetError):
    """Tensor shapes are inconsistent with the operation's contract."""


class StaleCache(ElanetError):
    """Backward pass received a cache that does not match the parameters."""


class DivergedLoss(ElanetError):
    """Training loss became non-finite; the run was aborted."""


class EmptyPredictionSet(ElanetError):
    """Metrics require at least one prediction row."""


class SingleClassOnly(ElanetError):
    """ROC requires at least one positive and one negative row."""
