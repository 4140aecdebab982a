"""Centralized numerical tolerances."""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-10
    unit_trace: float = 1e-9
    psd_floor: float = -1e-10
    support: float = 1e-12
    unitarity: float = 1e-9
    kraus_completeness: float = 1e-9


TOL = Tolerances()
