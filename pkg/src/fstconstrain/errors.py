"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FstConstrainError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(FstConstrainError, ValueError):
    pass


class AlphabetMismatchError(PreconditionError):
    pass


class ResourceLimitError(FstConstrainError):
    def __init__(self, what: str, cap: int):
        super().__init__(f"{what} exceeded the configured cap of {cap}")
        self.cap = cap


class IntegrityError(FstConstrainError):
    """An automaton violated an invariant its construction should guarantee."""


class RegexSyntaxError(FstConstrainError, ValueError):
    def __init__(self, message: str, pattern: str, position: int):
        super().__init__(f"{message} at position {position} in {pattern!r}")
        self.pattern = pattern
        self.position = position


class GrammarSyntaxError(FstConstrainError, ValueError):
    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{message} ({where})")
        self.line = line
        self.column = column


class DeterminismError(FstConstrainError):
    def __init__(self, report):
        super().__init__(str(report))
        self.report = report


class ConstraintViolation(FstConstrainError):
    def __init__(self, token: int, state: int, step: int | None = None):
        msg = f"token {token} is not allowed in state {state}"
        if step is not None:
            msg += f" (step {step})"
        super().__init__(msg)
        self.token = token
        self.state = state
        self.step = step


class VocabularyError(FstConstrainError, ValueError):
    pass


class VocabularyMismatch(FstConstrainError):
    pass


class SchemaError(FstConstrainError, ValueError):
    pass


class BudgetExceeded(FstConstrainError):
    pass
