"""Quantum instruments, measurement information bounds and Landauer erasure."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .config import TOL
from .errors import DomainError, ValidationError
from .linalg import as_matrix, partial_trace, trace_distance
from .open_dynamics import davies_generator
from .states import entropy_of_spectrum, mean_energy, von_neumann_entropy

PREMEASUREMENT = "premeasurement_unitary"
POINTER_DECOHERED = "pointer_decohered"


@dataclass(frozen=True, eq=False)
class Instrument:
    """One Kraus set per outcome; the summed map must be trace preserving."""

    outcome_maps: tuple
    labels: tuple = ()

    def __post_init__(self):
        maps = tuple(tuple(as_matrix(k, "Kraus operator") for k in ks) for ks in self.outcome_maps)
        if not maps or any(not ks for ks in maps):
            raise ValidationError("every outcome needs at least one Kraus operator")
        d = maps[0][0].shape[1]
        total = sum(k.conj().T @ k for ks in maps for k in ks)
        dev = float(np.max(np.abs(total - np.eye(d))))
        if dev > TOL.kraus_completeness:
            raise ValidationError(f"instrument is not trace preserving: deviation {dev:.2e}")
        labels = tuple(self.labels) if self.labels else tuple(range(len(maps)))
        object.__setattr__(self, "outcome_maps", maps)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.outcome_maps[0][0].shape[1]

    @property
    def efficient(self) -> bool:
        return all(len(ks) == 1 for ks in self.outcome_maps)

    @classmethod
    def projective(cls, basis) -> "Instrument":
        """Rank-1 von Neumann measurement in the columns of ``basis``."""
        b = np.asarray(basis, dtype=complex)
        return cls(tuple((np.outer(b[:, k], b[:, k].conj()),) for k in range(b.shape[1])))

    @classmethod
    def identity(cls, d: int) -> "Instrument":
        return cls(((np.eye(d, dtype=complex),),))


@dataclass
class MeasurementOutcome:
    probabilities: np.ndarray
    post_states: list
    shannon: float
    non_destructive: bool
    average_state: np.ndarray = field(repr=False)


def shannon_entropy(p) -> float:
    return entropy_of_spectrum(np.clip(np.asarray(p, dtype=float), 0.0, None))


def apply_instrument(rho, instrument: Instrument) -> MeasurementOutcome:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[0] != instrument.dim:
        raise ValidationError("state and instrument dimensions differ")
    probs, posts = [], []
    avg = np.zeros_like(rho)
    for ks in instrument.outcome_maps:
        out = sum(k @ rho @ k.conj().T for k in ks)
        p = float(np.trace(out).real)
        probs.append(p)
        posts.append(out / p if p > 1e-12 else None)
        avg += out
    probs = np.array(probs)
    return MeasurementOutcome(
        probs, posts, shannon_entropy(probs), trace_distance(avg, rho) < 1e-9, avg
    )


class InformationGain(NamedTuple):
    lower: float
    gain: float
    upper: float

    @property
    def margin(self) -> float:
        return min(self.gain - self.lower, self.upper - self.gain)


def information_gain_bounds(rho, outcome: MeasurementOutcome) -> InformationGain:
    """``0 <= S(rho) - sum_k p_k S(rho_k) <= I{p_k}`` for a non-destructive measurement."""
    if not outcome.non_destructive:
        raise DomainError(
            "information-gain bound assumes a non-destructive measurement (sum_k p_k rho_k = rho)"
        )
    residual = sum(
        p * von_neumann_entropy(s) for p, s in zip(outcome.probabilities, outcome.post_states) if s is not None
    )
    return InformationGain(0.0, von_neumann_entropy(rho) - residual, outcome.shannon)


class JointInformation(NamedTuple):
    shannon: float
    c12: float
    bound_holds: bool
    mode: str


def joint_state(rho, instrument: Instrument, mode: str = PREMEASUREMENT) -> np.ndarray:
    """Final S+M state with one pointer state per Kraus operator (S is the slow index)."""
    if mode not in (PREMEASUREMENT, POINTER_DECOHERED):
        raise ValidationError(f"unknown dilation mode {mode!r}")
    kraus = [k for ks in instrument.outcome_maps for k in ks]
    m = len(kraus)
    d = instrument.dim
    v = np.zeros((d * m, d), dtype=complex)
    for j, k in enumerate(kraus):
        e = np.zeros((m, 1))
        e[j] = 1.0
        v += np.kron(k, e)
    out = v @ np.asarray(rho, dtype=complex) @ v.conj().T
    if mode == POINTER_DECOHERED:
        mask = np.kron(np.ones((d, d)), np.eye(m))
        out = out * mask
    return out


def joint_mutual_information(rho, instrument: Instrument, mode: str = PREMEASUREMENT) -> JointInformation:
    """Shannon information of the outcomes against the S:M mutual information ``C12``."""
    rho12 = joint_state(rho, instrument, mode)
    m = sum(len(ks) for ks in instrument.outcome_maps)
    dims = (instrument.dim, m)

    def ent(x):
        return entropy_of_spectrum(np.clip(np.linalg.eigvalsh(0.5 * (x + x.conj().T)), 0.0, None))

    c12 = ent(partial_trace(rho12, dims, 0)) + ent(partial_trace(rho12, dims, 1)) - ent(rho12)
    shannon = apply_instrument(rho, instrument).shannon
    return JointInformation(shannon, float(c12), shannon <= c12 + 1e-9, mode)


def random_nondestructive_instrument(rho, n_outcomes: int, rng, kraus_per_outcome: int = 1) -> Instrument:
    """Instrument commuting with ``rho``: POVM and phases diagonal in its eigenbasis.

    ``kraus_per_outcome > 1`` gives a non-efficient instrument.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    _, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    weights = rng.dirichlet(np.ones(n_outcomes), size=d)  # weights[i, k]
    mix = rng.dirichlet(np.ones(kraus_per_outcome))
    maps = []
    for k in range(n_outcomes):
        root = np.sqrt(weights[:, k])
        ks = []
        for j in range(kraus_per_outcome):
            phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=d))
            ks.append(np.sqrt(mix[j]) * (v * (phases * root)) @ v.conj().T)
        maps.append(tuple(ks))
    return Instrument(tuple(maps))


# ---------------------------------------------------------------------------
# Landauer erasure

@dataclass
class LandauerPoint:
    duration: float
    total_duration: float
    heat: float
    entropy_change: float
    landauer_margin: float
    excess_heat: float = float("nan")


@dataclass
class LandauerReport:
    points: list
    q_infinity: float
    fit_C: float
    fit_residuals: list
    warnings: list

    def rows(self):
        return [(p.duration, p.heat, p.entropy_change, p.excess_heat) for p in self.points]


def memory_hamiltonian(d: int, gap: float) -> np.ndarray:
    """Ground level 0, all other levels raised to ``gap``."""
    return np.diag([0.0] + [gap] * (d - 1)).astype(complex)


def memory_coupling(d: int) -> np.ndarray:
    a = np.zeros((d, d), dtype=complex)
    a[0, 1:] = 1.0
    return a + a.conj().T


def erasure_run(duration: float, memory_dim: int = 2, beta0: float = 1.0, gamma0: float = 1.0,
                gap_max: float = 10.0, n_steps: int = 128):
    """One erasure schedule; returns ``(final_state, heat_to_bath)``.

    The gap is raised from 0 to ``gap_max`` in ``n_steps`` equal quenches;
    after each quench the memory touches the bath for ``duration``, so the
    whole schedule lasts ``n_steps * duration``.  With a single bath and a
    fixed Hamiltonian during each contact, the heat of that contact is the
    exact energy drop ``Tr[H rho_in] - Tr[H rho_out]``.
    """
    coupling = memory_coupling(memory_dim)
    rho = np.eye(memory_dim, dtype=complex) / memory_dim
    heat = 0.0
    for i in range(1, n_steps + 1):
        h = memory_hamiltonian(memory_dim, gap_max * i / n_steps)
        gen = davies_generator(h, coupling, beta0, gamma0)
        e_in = mean_energy(rho, h)
        rho = gen.evolve(rho, duration)
        heat += e_in - mean_energy(rho, h)
    return rho, heat


def landauer_erasure_experiment(durations, memory_dim: int = 2, beta0: float = 1.0, gamma0: float = 1.0,
                                gap_max: float = 10.0, n_steps: int = 128) -> LandauerReport:
    """Heat and memory-entropy change of erasure over a ladder of contact durations.

    ``durations`` are the bath-contact times after each level shift (see
    :func:`erasure_run`).  ``Q_inf`` is extrapolated from the two longest
    durations assuming ``Q = Q_inf + C / t``; ``excess_heat = Q - Q_inf``.
    """
    durations = sorted(float(t) for t in durations)
    s_init = np.log(memory_dim)
    points, warnings = [], []
    for t in durations:
        rho, q = erasure_run(t, memory_dim, beta0, gamma0, gap_max, n_steps)
        ds = von_neumann_entropy(rho) - s_init
        points.append(LandauerPoint(t, n_steps * t, float(q), float(ds), float(beta0 * q + ds)))
        if ds > -1e-9:
            warnings.append(f"duration {t:g}: no entropy decrease, fit is degenerate")
    if len(points) >= 2:
        a, b = points[-2], points[-1]
        q_inf = (b.duration * b.heat - a.duration * a.heat) / (b.duration - a.duration)
    else:
        q_inf = float("nan")
    for p in points:
        p.excess_heat = p.heat - q_inf
    inv_t = np.array([1.0 / p.duration for p in points if p.duration > 0])
    excess = np.array([p.excess_heat for p in points if p.duration > 0])
    if len(inv_t) >= 2 and np.all(np.isfinite(excess)):
        c = float(np.dot(inv_t, excess) / np.dot(inv_t, inv_t))
        residuals = (excess - c * inv_t).tolist()
    else:
        c, residuals = float("nan"), []
    return LandauerReport(points, float(q_inf), c, residuals, warnings)
