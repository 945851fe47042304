"""Exception hierarchy shared by the solver, the analysis tools and the CLI."""


class TempleFrontError(Exception):
    """Base class for every error raised by this package."""


class InvalidDomainError(TempleFrontError, ValueError):
    """The invariant box is degenerate (some lower bound is not below its upper bound)."""


class ZeroJumpError(TempleFrontError, ValueError):
    """Left and right states coincide where a genuine jump is required."""


class NotElementaryWaveError(TempleFrontError, ValueError):
    """Two states differ in more than one Riemann invariant (or in the wrong one)."""


class GridMismatchError(TempleFrontError, ValueError):
    """A state does not lie on the dyadic grid of the current quantization level."""


class OutOfDomainError(TempleFrontError, ValueError):
    """A value lies outside the invariant box."""


class DomainMismatchError(TempleFrontError, ValueError):
    """Two profiles are defined on different intervals."""


class NotBackwardSolvableError(TempleFrontError, ValueError):
    """Terminal data with an upward jump larger than one quantum cannot be traced backward."""


class PreconditionError(TempleFrontError, ValueError):
    """Input data violate a documented precondition of an operation."""


class HorizonTooShortError(TempleFrontError, ValueError):
    """The requested final time does not exceed the controllability horizon."""


class NotAttainableError(TempleFrontError, ValueError):
    """The target profile is outside the set that the synthesizer can certify.

    Attributes
    ----------
    witness : tuple
        ``(family, x, y)`` realising the worst difference quotient.
    verdict : str
        ``"indeterminate"`` when the target still satisfies the outer decay
        bound for the requested time, ``"violates-outer-bound"`` otherwise.
    """

    def __init__(self, message, witness=None, verdict="indeterminate"):
        super().__init__(message)
        self.witness = witness
        self.verdict = verdict


class RunawayError(TempleFrontError, RuntimeError):
    """The event loop exceeded its event budget."""


class CalibrationError(TempleFrontError, RuntimeError):
    """Decay constants could not be fitted from the simulated ensemble."""
