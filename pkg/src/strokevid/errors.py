"""Exception hierarchy shared across the package."""


class StrokeVidError(Exception):
    """Base class for all package errors."""


class InputError(StrokeVidError, ValueError):
    """A caller-supplied value violates an operation's precondition."""


class ConfigurationError(StrokeVidError, ValueError):
    """Shapes or settings are inconsistent with the model configuration."""


class FormatError(StrokeVidError, ValueError):
    """An on-disk artifact does not parse as the expected format."""


class TrainingFault(StrokeVidError, RuntimeError):
    """A non-finite loss or other unrecoverable condition during training."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
