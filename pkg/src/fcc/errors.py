"""Exception types shared across the package."""


class FccError(Exception):
    """Base class for all errors raised by this package."""


class WithinImageEdge(FccError):
    """A match connects two keypoints of the same image."""


class IndexOutOfRange(FccError):
    """An image or keypoint index is outside its valid range."""


class PowerTooLarge(FccError):
    """Requested matrix power exceeds the supported maximum (4)."""


class TooLargeForOracle(FccError):
    """Graph is too large for the dense reference computation."""


class ConfigInvalid(FccError):
    """A configuration value violates its documented constraints."""


class ParseError(FccError):
    """A text file does not conform to its documented format."""


class EstimateNotSubset(FccError):
    """An estimated edge set contains edges absent from the input set."""


class HeaderMismatch(FccError):
    """Two files that must describe the same partition disagree."""
