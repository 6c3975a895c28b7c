"""Exception hierarchy shared by every qsumm module."""


class QsummError(Exception):
    """Base class for all data-level errors raised by qsumm."""

    kind = "error"


class ArgumentError(QsummError, ValueError):
    kind = "argument"


class CorpusParseError(QsummError, ValueError):
    """Malformed JSON input; ``offset`` is the byte offset of the problem."""

    kind = "parse"

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class SchemaError(QsummError, ValueError):
    kind = "schema"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class FormatError(QsummError, ValueError):
    kind = "format"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UndefinedCorrelationError(QsummError, ValueError):
    kind = "undefined-correlation"


class TrainingError(QsummError, RuntimeError):
    kind = "training"


class ConfigError(QsummError, ValueError):
    kind = "config"

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
