"""Exception types raised across the package."""


class QrlsimError(Exception):
    """Base class for every error raised by qrlsim."""


# quantum_core
class InvalidSizeError(QrlsimError, ValueError):
    pass


class ShapeError(QrlsimError, ValueError):
    pass


class InvalidAxisError(QrlsimError, ValueError):
    pass


class InvalidStateError(QrlsimError, ValueError):
    pass


class ExcessiveIterationsError(QrlsimError, ValueError):
    pass


# rl_core
class MissingStateError(QrlsimError, KeyError):
    pass


class UnsupportedEnvironmentError(QrlsimError, TypeError):
    pass


class NoSolutionError(QrlsimError, ArithmeticError):
    pass


class ConfigError(QrlsimError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


# gridworld
class LayoutError(QrlsimError, ValueError):
    """Malformed or invalid layout document.

    ``line`` and ``column`` are 1-based and ``None`` when the problem is not
    tied to a single position.
    """

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class LayoutDimensionError(LayoutError):
    pass


class UnknownCharacterError(LayoutError):
    pass


class DuplicateStartError(LayoutError):
    pass


class DuplicateGoalError(LayoutError):
    pass


class MissingStartError(LayoutError):
    pass


class MissingGoalError(LayoutError):
    pass


class UnreachableGoalError(LayoutError):
    pass
