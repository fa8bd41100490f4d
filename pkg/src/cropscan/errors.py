"""Exception types shared across the package."""


class CropscanError(Exception):
    """Base class for all package errors."""


class ParseError(CropscanError):
    """A document could not be parsed; the message names the offending field."""


class LabelError(CropscanError):
    """An annotation carried a label outside the accepted vocabulary."""


class DegenerateShapeError(CropscanError):
    """A shape collapsed to fewer than 3 distinct points or a zero-area bbox."""


class DanglingReferenceError(CropscanError):
    """An annotation document references an image that does not exist."""


class DuplicateImageError(CropscanError):
    """Two source files resolve to the same image id."""


class ConfigurationError(CropscanError):
    """A config value is out of range or a run precondition is unmet."""


class ContractError(CropscanError):
    """A function precondition was violated (invalid box, shape mismatch)."""


class DimensionError(ContractError):
    """Target dimensions are too small for the geometry being placed."""


class CheckpointError(CropscanError):
    """A checkpoint file is missing, corrupt, or of the wrong model kind."""
