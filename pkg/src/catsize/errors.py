"""Exception hierarchy shared by all catsize modules."""


class CatsizeError(Exception):
    """Base class for every error raised by catsize."""


class ValidationError(CatsizeError, ValueError):
    """Invalid parameters, shapes or physical preconditions."""


class TruncationError(CatsizeError):
    """Fock-space cutoff too small for the requested state or operation."""


class FitError(CatsizeError):
    """Raised when a least-squares problem cannot be set up."""


class RecordFormatError(CatsizeError, ValueError):
    """Malformed measurement-record file.

    ``line`` and ``column`` are 1-based and refer to the offending cell.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
