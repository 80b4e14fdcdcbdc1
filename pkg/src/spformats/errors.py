"""Exception hierarchy shared by every format module."""


class SparseFormatError(Exception):
    """Base class for all errors raised by spformats."""


class BoundsError(SparseFormatError, IndexError):
    pass


class DimensionError(SparseFormatError, ValueError):
    pass


class ParameterError(SparseFormatError, ValueError):
    pass


class InternalError(SparseFormatError, RuntimeError):
    """A storage layout contradicted its own construction data."""


class ParseError(SparseFormatError, ValueError):
    pass


class UnsupportedError(SparseFormatError, ValueError):
    pass


class FormatError(SparseFormatError, ValueError):
    """Binary container has the wrong magic, version or format tag."""


class CorrectnessError(SparseFormatError, RuntimeError):
    """A format's SpMV disagreed with the CSR reference."""


class IoError(SparseFormatError, OSError):
    pass
