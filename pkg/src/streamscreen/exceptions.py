class StreamScreenError(Exception):
    """Base class for errors raised by streamscreen."""


class InvalidInputError(StreamScreenError, ValueError):
    """A value, weight, index or argument is outside its allowed range."""


class ConfigurationError(StreamScreenError, ValueError):
    """Inconsistent screener configuration."""


class DegenerateScoreError(StreamScreenError, ValueError):
    """A criterion cannot be evaluated on the data seen so far."""


class ParseError(StreamScreenError, ValueError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
