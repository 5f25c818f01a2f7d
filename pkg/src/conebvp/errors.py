"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ConeBVPError(Exception):
    exit_code = 1


class ConfigError(ConeBVPError, ValueError):
    """Malformed or invalid run configuration (bad keys, broken invariants)."""

    exit_code = 2

    def __init__(self, message, key_path=None):
        self.key_path = key_path
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class ParameterError(ConeBVPError, ValueError):
    """Problem parameters fall outside the region an operation requires."""

    exit_code = 2


class SolverError(ConeBVPError, RuntimeError):
    exit_code = 3


class CheckFailure(ConeBVPError):
    exit_code = 4


class ExprError(ConeBVPError, ValueError):
    exit_code = 5


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class ExprDomainError(ExprError, ArithmeticError):
    """Evaluation left the real domain of an operator (ln of a negative, x/0, ...)."""

    def __init__(self, message, subexpr=None, binding=None):
        self.subexpr = subexpr
        self.binding = binding
        detail = message
        if subexpr is not None:
            detail += f" in `{subexpr}`"
        if binding is not None:
            detail += f" at {binding}"
        super().__init__(detail)


class ExprOverflowError(ExprDomainError, OverflowError):
    """A finite input produced a non-finite value (typically a diverging iterate)."""
