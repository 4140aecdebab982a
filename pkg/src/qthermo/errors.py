"""Exception hierarchy shared by all modules."""


class QThermoError(Exception):
    """Base class for toolkit errors."""


class ValidationError(QThermoError, ValueError):
    """An input violates a structural invariant (shape, hermiticity, trace...)."""


class DomainError(QThermoError, ValueError):
    """A value lies outside the domain where the quantity is defined."""


class TemperatureDivergesError(DomainError):
    """The requested energy sits on a spectral endpoint, so beta is infinite."""


class NumericalError(QThermoError, ArithmeticError):
    """A computation lost accuracy beyond its stated tolerance."""


class NotAWorkCycleError(ValidationError):
    """Segment list does not start and end at the origin Hamiltonian."""


class GibbsUnreachableError(QThermoError):
    """No protocol in the search space lands close enough to a Gibbs target."""

    def __init__(self, message, best_distance):
        super().__init__(message)
        self.best_distance = best_distance
