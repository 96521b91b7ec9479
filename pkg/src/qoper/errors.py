"""Exception hierarchy shared by all modules."""


class QoperError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(QoperError, ValueError):
    """Input data violates a documented precondition."""


class DegenerateError(QoperError):
    """Roots or poles collide, or a configuration is degenerate."""


class ResonanceError(QoperError):
    """A linear coefficient vanishes because the twist is resonant with q."""


class ConsistencyError(QoperError):
    """A consistency condition fails (for instance Bethe equations are violated)."""


class InfeasibleDegreesError(InvalidInputError):
    """A predicted Q- degree is negative."""


class GenericityError(QoperError):
    """A Backlund chain step violates its nondegeneracy hypotheses."""

    def __init__(self, message, step=None, witnesses=None):
        super().__init__(message)
        self.step = step
        self.witnesses = list(witnesses or [])


class VerificationError(QoperError):
    """A numerical identity fails beyond tolerance."""


class BudgetExceededError(QoperError):
    """A problem exceeds the configured computational budget."""


class CellError(QoperError):
    """A Bruhat factorization lands outside the expected cell."""
