"""Exception types shared across the package."""


class XafcmError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInput(XafcmError):
    pass


class UnknownSymbol(XafcmError):
    """A symbol outside the alphabet was encountered.

    `position` is the byte offset in the original input, `symbol` the
    offending character.
    """

    def __init__(self, position, symbol):
        super().__init__(f"unknown symbol {symbol!r} at position {position}")
        self.position = position
        self.symbol = symbol


class LengthMismatch(XafcmError):
    pass


class AlphabetMismatch(XafcmError):
    pass


class EmptyReference(XafcmError):
    pass


class EmptyTarget(XafcmError):
    pass


class EmptySegment(XafcmError):
    pass


class NoSolution(XafcmError):
    """The smoothing-weight equation has no positive solution."""


class FormatError(XafcmError):
    """Malformed model file. `line` is the 1-based offending line number."""

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class VersionMismatch(XafcmError):
    pass


class TooFewPeaks(XafcmError):
    pass


class DuplicateLabel(XafcmError):
    pass


class UnknownLabel(XafcmError):
    pass
