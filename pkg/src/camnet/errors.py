"""Exception hierarchy shared by every module."""


class CamnetError(Exception):
    """Base class for all package errors."""


class ShapeError(CamnetError, ValueError):
    """Tensor extents are incompatible with the requested operation."""


class SizeError(CamnetError, OverflowError):
    pass


class ConfigError(CamnetError, ValueError):
    pass


class InputError(CamnetError, ValueError):
    pass


class DecodeError(CamnetError, ValueError):
    pass


class FormatError(CamnetError, ValueError):
    """Weight container header is not recognised."""


class IncompatibleWeightsError(CamnetError, ValueError):
    """Container tensors do not match the target graph."""


class CorruptionError(CamnetError, ValueError):
    """Container payload is shorter or longer than its manifest claims."""
