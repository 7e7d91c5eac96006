"""Exception hierarchy shared by every layer of the library."""


class PerceptError(Exception):
    """Base class for all library errors."""


# pipeline / registry
class ArityMismatch(PerceptError):
    pass


class IndexOutOfRange(PerceptError, IndexError):
    pass


class NameNotFound(PerceptError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NameAmbiguous(PerceptError):
    pass


class StepError(PerceptError):
    """A processor failed inside a pipeline.

    The original exception is kept as ``__cause__`` and on ``.error``.
    """

    def __init__(self, index, name, error):
        self.index = index
        self.name = name
        self.error = error
        super().__init__(f"step {index} ({name!r}) failed: {type(error).__name__}: {error}")


class UnknownProcessorType(PerceptError):
    pass


class InvalidParam(PerceptError, ValueError):
    pass


class ConfigError(PerceptError, ValueError):
    """Structurally invalid pipeline configuration document."""


# boxes
class LengthMismatch(PerceptError, ValueError):
    pass


class DegenerateBox(PerceptError, ValueError):
    pass


# image io
class UnsupportedFormat(PerceptError):
    pass


class CorruptHeader(PerceptError):
    pass


# geometry
class ZeroNorm(PerceptError, ValueError):
    pass


class ZeroAxis(PerceptError, ValueError):
    pass


class NotUnit(PerceptError, ValueError):
    pass


class NotARotation(PerceptError, ValueError):
    pass


class BehindCamera(PerceptError, ValueError):
    def __init__(self, index, depth):
        self.index = index
        self.depth = depth
        super().__init__(f"point {index} is behind the camera (z={depth:.3g})")


class InsufficientPoints(PerceptError, ValueError):
    pass


class DegenerateConfiguration(PerceptError, ValueError):
    pass


# messages / datasets
class UnknownMessageType(PerceptError, ValueError):
    pass


class SchemaViolation(PerceptError, ValueError):
    pass


class ManifestError(PerceptError):
    """Problem with a manifest file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingClassHeader(ManifestError):
    pass


class UnknownClassName(ManifestError):
    pass


class MalformedLine(ManifestError):
    pass


class ShapeMismatch(PerceptError):
    pass


class SampleError(PerceptError):
    """Pipeline failure while processing one dataset sample."""

    def __init__(self, sample_index, error):
        self.sample_index = sample_index
        self.error = error
        super().__init__(f"sample {sample_index}: {error}")
