class DomainError(ValueError):
    """Parameters outside the mathematical domain of an operation."""


class SpectrumError(DomainError):
    """A singular-value sequence violates its contract (monotonicity, prefix range)."""


class BracketingError(RuntimeError):
    """Root scan ran past its search window without finding a sign change."""


class BudgetExceeded(RuntimeError):
    """An enumeration needed more memory than the configured budget allows."""


class CountCeilingExceeded(RuntimeError):
    """A lattice count went above the configured safety ceiling."""


class BoxTooSmall(RuntimeError):
    """Brute-force box cannot certify the requested rank."""


class InvariantViolation(AssertionError):
    """An internal consistency certificate failed. Always a bug."""
