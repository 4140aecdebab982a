"""Small-Hilbert-space quantum thermodynamics: states, work, baths, entropies."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    DomainError,
    GibbsUnreachableError,
    NotAWorkCycleError,
    NumericalError,
    QThermoError,
    TemperatureDivergesError,
    ValidationError,
)
from .kernels import BACKEND  # noqa: F401
from .states import (  # noqa: F401
    beta_of_energy,
    gibbs_entropy_at_energy,
    gibbs_state,
    mean_energy,
    relative_entropy,
    von_neumann_entropy,
)
from .protocols import ControlSet, WorkCycle  # noqa: F401
