"""Exception types shared across the toolkit.

Every error raised by the library derives from :class:`CodecError`; the CLI
maps subclasses onto its exit codes and prints ``ERROR <code>: <message>``
where ``<code>`` is the class name.
"""


class CodecError(Exception):
    """Base class for all toolkit errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class DimensionMismatch(CodecError):
    """Two grids that must share a shape do not."""

    def __init__(self, expected, actual, what="dimensions"):
        super().__init__(f"{what} mismatch: expected {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class IndivisibleGrid(CodecError):
    """Block grid does not evenly divide the image dimensions."""

    def __init__(self, height, width, rows, cols):
        super().__init__(
            f"grid {rows}x{cols} does not divide image {height}x{width}"
        )
        self.height = height
        self.width = width
        self.rows = rows
        self.cols = cols


class ZeroArea(CodecError):
    """Requested mask or image has zero height or width."""


class ShapeMismatch(CodecError):
    """Array shape incompatible with the sensing operator."""

    def __init__(self, expected, actual):
        super().__init__(f"expected shape {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class SingularProjection(CodecError):
    """Projection denominator is zero: eta == 0 at a never-observed position."""


class NonFiniteState(CodecError):
    """A solver iterate contains NaN or infinity (divergence)."""


class TooSmall(CodecError):
    """Input smaller than the metric's window."""


class Malformed(CodecError):
    """File cannot be parsed; carries the byte offset of the problem."""

    def __init__(self, offset: int, reason: str):
        super().__init__(f"malformed at byte {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class UnsupportedDepth(CodecError):
    """Sample depth outside the supported 8/16-bit range."""


class BadMagic(CodecError):
    """File does not start with the expected magic bytes."""

    def __init__(self, expected: bytes, actual: bytes):
        super().__init__(f"bad magic: expected {expected!r}, got {actual!r}")
        self.expected = expected
        self.actual = actual


class UnsupportedVersion(CodecError):
    """Container version this build does not understand."""

    def __init__(self, version: int):
        super().__init__(f"unsupported container version {version}")
        self.version = version


class InvariantViolation(CodecError):
    """A parsed or constructed object violates a declared invariant."""

    def __init__(self, field: str, detail: str = ""):
        msg = f"invariant violated on field '{field}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.field = field
