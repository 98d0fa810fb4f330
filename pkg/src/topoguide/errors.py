"""Exception hierarchy shared across the package."""


class TopoguideError(Exception):
    """Base class for every error raised by topoguide."""


class DimensionError(TopoguideError, ValueError):
    pass


class DegenerateInputError(TopoguideError, ValueError):
    pass


class UndefinedStatisticError(TopoguideError, ValueError):
    """A statistic (e.g. Pearson correlation) has no defined value on the input."""


class ScheduleError(TopoguideError, ValueError):
    pass


class ConfigError(TopoguideError, ValueError):
    pass


class NumericError(TopoguideError, ArithmeticError):
    def __init__(self, message, layer=None):
        super().__init__(message if layer is None else f"{message} (layer {layer})")
        self.layer = layer


class TrainingError(NumericError):
    pass


class GenerationError(TopoguideError, RuntimeError):
    pass


class FormatError(TopoguideError, ValueError):
    """Malformed, truncated or version-incompatible file."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"{message} (line {line})")
        self.line = line


class ChecksumError(FormatError):
    pass


class InputError(TopoguideError, ValueError):
    """Arguments violate an operation's preconditions."""


class ValidationError(TopoguideError, ValueError):
    """Well-formed input whose content is inconsistent (e.g. duplicate ids)."""
