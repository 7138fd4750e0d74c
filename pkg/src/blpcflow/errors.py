"""Exception hierarchy shared across the package."""


class BlpcError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(BlpcError):
    """Operands have incompatible or degenerate dimensions."""


class ConfigError(BlpcError):
    """Invalid parameter value or configuration document."""


class DegenerateInputError(BlpcError):
    """Input carries no usable signal (e.g. an all-zero image)."""


class SceneSpecError(BlpcError):
    """A synthetic scene description is unrenderable."""


class ImageFormatError(BlpcError):
    """Malformed image file. Carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(BlpcError):
    """Recognized container but unsupported pixel format (e.g. 16-bit)."""


class FlowFormatError(BlpcError):
    """Malformed .flo file (bad magic tag or header)."""


class FlowLengthError(FlowFormatError):
    """.flo payload shorter or longer than the header promises."""
