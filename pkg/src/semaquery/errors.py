"""Exception hierarchy for the engine."""


class SemaQueryError(Exception):
    """Base class for all engine errors."""


class LexError(SemaQueryError):
    """Tokenizer failure; carries line/column of the offending character."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at {line}:{column}")
        self.line = line
        self.column = column


class ParseError(SemaQueryError):
    """Syntax error with position diagnostics."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        if line:
            message = f"{message} at {line}:{column}"
        super().__init__(message)
        self.line = line
        self.column = column


class BindError(SemaQueryError):
    """Name resolution or type-check failure."""


class CatalogError(SemaQueryError):
    """Unknown table/model, duplicate registration, or persistence failure."""


class IngestError(SemaQueryError):
    """CSV import failure (ragged rows, unreadable file)."""


class ExecutionError(SemaQueryError):
    """Runtime failure during query execution."""


class BackendError(SemaQueryError):
    """A model backend call failed (network, scripted fault, bad config)."""

    def __init__(self, message: str, retryable: bool = True):
        super().__init__(message)
        self.retryable = retryable


class MalformedOutput(SemaQueryError):
    """Model text could not be parsed into structured records."""


class RowCountMismatch(SemaQueryError):
    """Parsed record count does not match the number of marshaled rows."""

    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} records, got {got}")
        self.expected = expected
        self.got = got
