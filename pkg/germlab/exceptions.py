"""Exceptions raised by germlab."""

from __future__ import annotations

from .const import ExitCode, GermlabErrorCode


class GermlabException(Exception):
    """Base class for every germlab failure."""

    exit_code: ExitCode = ExitCode.PRECONDITION

    def __init__(self, translation_key: GermlabErrorCode, detail: str = "") -> None:
        """Initialize with a translation key and a free-form detail."""
        super().__init__(detail or translation_key.value)
        self.translation_key = translation_key
        self.detail = detail


class PreconditionError(GermlabException):
    """An operation was called outside its domain."""


class PrecisionError(PreconditionError):
    """A value is not readable at the precision carried by its operands."""

    def __init__(self, detail: str = "") -> None:
        """Initialize with the fixed insufficient-precision key."""
        super().__init__(GermlabErrorCode.INSUFFICIENT_PRECISION, detail)


class IncompatibleFieldError(PreconditionError):
    """Operands live over different residue fields."""

    def __init__(self, p: int, other: int) -> None:
        """Initialize with both primes."""
        super().__init__(
            GermlabErrorCode.INCOMPATIBLE_PRIME, f"operands over F_{p} and F_{other}"
        )


class StabilizationError(GermlabException):
    """A doubling check (radius or modulus) did not stabilize."""

    exit_code = ExitCode.STABILIZATION


class BudgetExceededError(GermlabException):
    """An enumeration would exceed the configured budget."""

    exit_code = ExitCode.BUDGET

    def __init__(self, size: int, budget: int) -> None:
        """Initialize with the requested size and the budget."""
        super().__init__(
            GermlabErrorCode.BUDGET_EXCEEDED,
            f"enumeration of {size} points exceeds budget {budget}",
        )
        self.size = size
        self.budget = budget
