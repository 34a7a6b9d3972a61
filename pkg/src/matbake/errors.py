"""Exception hierarchy shared by all matbake stages.

Each error class maps to one CLI exit code (see cli.EXIT_CODES).
"""


class MatbakeError(Exception):
    """Base class for all matbake errors."""


class ParseError(MatbakeError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingUVsError(MatbakeError):
    """A mesh face lacks texture-coordinate indices."""


class EmptyMeshError(MatbakeError):
    """Operation requires a non-empty mesh."""


class DegenerateExtentError(MatbakeError):
    """Mesh has zero spatial extent; normalization scale is undefined."""


class DecodeError(MatbakeError):
    """Image file could not be decoded."""


class ShapeMismatchError(MatbakeError):
    """Two rasters or buffers that must agree in shape do not."""


class LengthMismatchError(MatbakeError):
    """Sequence lengths that must agree do not."""


class BackendUnavailableError(MatbakeError):
    """Segmentation backend could not produce a result (after retries)."""


class ProtocolError(MatbakeError):
    """Segmentation backend returned a malformed or out-of-contract response."""


class MissingClassError(MatbakeError):
    """Material table is missing one of the required classes."""


class MaterialRangeError(MatbakeError):
    """Material table value outside its legal range."""


class EmptyOverlapError(MatbakeError):
    """Metric has no valid texels to compare (ground truth entirely masked)."""


class TooSmallError(MatbakeError):
    """Image too small for the requested windowed metric."""


class ConfigError(MatbakeError):
    """Invalid pipeline configuration."""
