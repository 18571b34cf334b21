"""Exception hierarchy shared by all cct modules."""


class CCTError(Exception):
    pass


class ConfigError(CCTError, ValueError):
    """Invalid hyperparameter or configuration field.

    ``field`` names the offending setting when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ArchitectureError(ConfigError):
    pass


class ShapeError(CCTError, ValueError):
    pass


class LabelError(CCTError, ValueError):
    pass


class NumericError(CCTError, ArithmeticError):
    pass


class DataError(CCTError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StateError(CCTError, RuntimeError):
    pass


class UndefinedMetricError(CCTError, ValueError):
    pass


class CheckpointError(CCTError, ValueError):
    pass
