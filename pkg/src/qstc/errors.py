"""Exception types shared across the package."""


class QstcError(Exception):
    """Base class for all package errors."""


class DimensionError(QstcError, ValueError):
    pass


class DomainError(QstcError, ValueError):
    """A nonlinearity was evaluated outside its domain."""


class IntegrationError(QstcError, ArithmeticError):
    """Non-finite state encountered while integrating.

    Attributes
    ----------
    time : float
        Time (relative to the start of the integration) of the first
        non-finite state.
    """

    def __init__(self, message, time=float("nan")):
        super().__init__(message)
        self.time = time


class AssumptionViolation(QstcError, ValueError):
    """A design precondition does not hold.

    ``name`` identifies the violated condition, ``margin`` how far off it is
    (negative means violated).
    """

    def __init__(self, name, message, margin=float("nan")):
        super().__init__(f"{name}: {message}")
        self.name = name
        self.margin = margin


class CertificationError(QstcError):
    """Certification failed at a named stage (e.g. ``LP_for_c``)."""

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class SolverError(QstcError, RuntimeError):
    """The LP solver failed numerically (cycling, unboundedness)."""


class STMError(QstcError, RuntimeError):
    pass
