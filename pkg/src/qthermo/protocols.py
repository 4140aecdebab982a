"""Control sets, work cycles and unitary work.

Sign convention: ``W`` is always the work EXTRACTED from the system,
``W = Tr[rho (H_heis(s) - H_heis(t))] = -integral Tr[rho dH/du] du``.
A positive value means energy left the system through the control fields.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, NotAWorkCycleError, ValidationError
from .linalg import check_hermitian, trace_distance, unitary_propagator
from .states import mean_energy, relative_entropy_gibbs, validate_density


@dataclass(frozen=True)
class ControlSet:
    """Hamiltonians the experimenter can switch among (all the same dimension)."""

    hamiltonians: tuple
    name: str = "F"

    def __post_init__(self):
        hs = tuple(check_hermitian(h, f"{self.name}[{i}]") for i, h in enumerate(self.hamiltonians))
        if not hs:
            raise ValidationError("control set must be non-empty")
        dims = {h.shape[0] for h in hs}
        if len(dims) != 1:
            raise ValidationError(f"control set mixes dimensions {sorted(dims)}")
        object.__setattr__(self, "hamiltonians", hs)

    @property
    def dim(self) -> int:
        return self.hamiltonians[0].shape[0]

    def __len__(self):
        return len(self.hamiltonians)

    def __getitem__(self, i):
        return self.hamiltonians[i]

    def subset(self, indices: Sequence[int], name: str | None = None) -> "ControlSet":
        return ControlSet(tuple(self.hamiltonians[i] for i in indices), name or f"{self.name}'")


@dataclass(frozen=True)
class WorkCycle:
    """Piecewise-constant schedule ``((control, duration), ...)``.

    The first and last segment must use the origin control; use
    :func:`validate_cycle` to check that against a control set.
    """

    origin: int
    segments: tuple = field(default=())

    def __post_init__(self):
        segs = tuple((int(c), float(t)) for c, t in self.segments)
        if not segs:
            segs = ((int(self.origin), 0.0),)
        object.__setattr__(self, "segments", segs)

    @classmethod
    def trivial(cls, origin: int = 0, duration: float = 0.0) -> "WorkCycle":
        return cls(origin, ((origin, duration),))

    @classmethod
    def sandwich(cls, origin: int, interior: Sequence) -> "WorkCycle":
        """Wrap interior segments with zero-duration origin segments."""
        return cls(origin, ((origin, 0.0), *interior, (origin, 0.0)))

    @property
    def total_duration(self) -> float:
        return float(sum(t for _, t in self.segments))

    @property
    def controls(self):
        return [c for c, _ in self.segments]

    @property
    def durations(self):
        return [t for _, t in self.segments]

    def then(self, other: "WorkCycle") -> "WorkCycle":
        """Run ``self`` followed by ``other`` (both must share the origin)."""
        if other.origin != self.origin:
            raise NotAWorkCycleError(
                f"cannot concatenate cycles with origins {self.origin} and {other.origin}"
            )
        return WorkCycle(self.origin, self.segments + other.segments)

    def reversed(self) -> "WorkCycle":
        return WorkCycle(self.origin, tuple(reversed(self.segments)))

    def with_durations(self, durations) -> "WorkCycle":
        return WorkCycle(self.origin, tuple((c, float(t)) for c, t in zip(self.controls, durations)))

    def sort_key(self):
        return (len(self.segments), tuple(self.durations), tuple(self.controls))


def validate_cycle(cycle: WorkCycle, F: ControlSet) -> WorkCycle:
    n = len(F)
    if not 0 <= cycle.origin < n:
        raise ValidationError(f"origin index {cycle.origin} out of range for {n} controls")
    for k, (c, t) in enumerate(cycle.segments):
        if not 0 <= c < n:
            raise ValidationError(f"segment {k} uses control {c}, out of range for {n} controls")
        if not np.isfinite(t) or t < 0:
            raise ValidationError(f"segment {k} has invalid duration {t}")
    first, last = cycle.segments[0][0], cycle.segments[-1][0]
    if first != cycle.origin:
        raise NotAWorkCycleError(f"not a work cycle: starts at control {first}, origin is {cycle.origin}")
    if last != cycle.origin:
        raise NotAWorkCycleError(f"not a work cycle: ends at control {last}, origin is {cycle.origin}")
    return cycle


@dataclass
class Trajectory:
    times: list
    states: list
    per_segment_propagators: list
    propagator: np.ndarray


def propagate_unitary(cycle: WorkCycle, F: ControlSet, rho0) -> Trajectory:
    """States at t=0 and after every segment, with ``U_k = exp(-i H_k tau_k)``."""
    validate_cycle(cycle, F)
    rho = validate_density(rho0, "rho0")
    if rho.shape[0] != F.dim:
        raise ValidationError(f"state dimension {rho.shape[0]} != control dimension {F.dim}")
    times, states, props = [0.0], [rho], []
    u_total = np.eye(F.dim, dtype=complex)
    t = 0.0
    for c, tau in cycle.segments:
        u = unitary_propagator(F[c], tau)
        rho = u @ rho @ u.conj().T
        u_total = u @ u_total
        t += tau
        times.append(t)
        states.append(rho)
        props.append(u)
    return Trajectory(times, states, props, u_total)


def composite_propagator(cycle: WorkCycle, F: ControlSet) -> np.ndarray:
    u_total = np.eye(F.dim, dtype=complex)
    for c, tau in cycle.segments:
        u_total = unitary_propagator(F[c], tau) @ u_total
    return u_total


def work_extracted_integral(cycle: WorkCycle, F: ControlSet, trajectory: Trajectory) -> float:
    """Switch-instant sum ``-sum_k Tr[rho(t_k) (H_{k+1} - H_k)]``."""
    if len(trajectory.states) != len(cycle.segments) + 1:
        raise ValidationError("trajectory does not belong to this cycle")
    w = 0.0
    for k in range(len(cycle.segments) - 1):
        h_now, h_next = F[cycle.segments[k][0]], F[cycle.segments[k + 1][0]]
        w -= mean_energy(trajectory.states[k + 1], h_next - h_now)
    return w


def work_extracted_ramped(cycle: WorkCycle, F: ControlSet, rho0, ramp_time: float, steps: int = 100):
    """Work when each switch becomes a linear ramp of length ``ramp_time``.

    The ramp integral ``-int Tr[rho dH/du] du`` uses the midpoint rule with
    ``steps`` sub-intervals (``dt = ramp_time / steps``).  Returns
    ``(work, final_state)``.
    """
    validate_cycle(cycle, F)
    if steps < 100:
        raise ValidationError("ramp quadrature needs at least 100 steps per ramp")
    rho = validate_density(rho0, "rho0")
    w = 0.0
    dt = ramp_time / steps
    segs = cycle.segments
    for k, (c, tau) in enumerate(segs):
        u = unitary_propagator(F[c], tau)
        rho = u @ rho @ u.conj().T
        if k + 1 == len(segs) or segs[k + 1][0] == c:
            continue
        h0, h1 = F[c], F[segs[k + 1][0]]
        dh = (h1 - h0) / steps
        for j in range(steps):
            h_mid = h0 + (j + 0.5) * dh
            half = unitary_propagator(h_mid, 0.5 * dt)
            rho = half @ rho @ half.conj().T
            w -= mean_energy(rho, dh)
            rho = half @ rho @ half.conj().T
    return w, rho


def work_extracted_two_point(cycle: WorkCycle, F: ControlSet, rho0) -> float:
    """``Tr[rho0 (H - U^dag H U)]`` with H the origin Hamiltonian."""
    validate_cycle(cycle, F)
    rho = validate_density(rho0, "rho0")
    h = F[cycle.origin]
    u = composite_propagator(cycle, F)
    return mean_energy(rho, h - u.conj().T @ h @ u)


def work_relative_entropy_identity(cycle: WorkCycle, F: ControlSet, rho0, beta: float):
    """Both sides of ``W = (S(rho_s | G) - S(rho_t | G)) / beta`` with G the origin Gibbs state.

    ``lhs`` is the two-point work; ``rhs`` uses only relative entropies.
    """
    if beta == 0:
        raise DomainError("the work/relative-entropy identity is undefined at beta = 0")
    traj = propagate_unitary(cycle, F, rho0)
    lhs = work_extracted_two_point(cycle, F, rho0)
    h = F[cycle.origin]
    rhs = (relative_entropy_gibbs(traj.states[0], h, beta) - relative_entropy_gibbs(traj.states[-1], h, beta)) / beta
    return lhs, rhs


def availability_unitary(rho, H, beta: float) -> float:
    """Upper bound ``S(rho | Gibbs(beta, H)) / beta`` on unitarily extractable work.

    Attained only when the Gibbs state is unitarily reachable from ``rho``
    (identical spectra).  May be ``inf`` on support mismatch.
    """
    if beta <= 0:
        raise DomainError("availability requires beta > 0")
    return relative_entropy_gibbs(rho, H, beta) / beta


def is_passive_spectral(rho, H, tol: float = 1e-9) -> bool:
    """True iff rho commutes with H and populations do not grow with energy."""
    rho = np.asarray(rho, dtype=complex)
    h = check_hermitian(H, "H")
    if float(np.max(np.abs(rho @ h - h @ rho))) > tol:
        return False
    e, v = np.linalg.eigh(h)
    r = v.conj().T @ rho @ v
    span = max(1.0, float(np.ptp(e)))
    levels, pops = [], []
    i = 0
    while i < len(e):
        j = i
        while j + 1 < len(e) and abs(e[j + 1] - e[i]) <= 1e-10 * span:
            j += 1
        block = r[i:j + 1, i:j + 1]
        p = np.linalg.eigvalsh(0.5 * (block + block.conj().T))
        levels.append(e[i])
        pops.append(p)
        i = j + 1
    for a in range(len(levels) - 1):
        lower_min = min(float(np.min(p)) for p in pops[: a + 1])
        if float(np.max(pops[a + 1])) > lower_min + tol:
            return False
    return True


def enumerate_cycles(F: ControlSet, origin: int, durations: Sequence[float], k_max: int, controls=None):
    """All sandwich cycles with up to ``k_max`` interior segments, trivial cycle first."""
    controls = range(len(F)) if controls is None else controls
    options = [(c, float(t)) for c in controls for t in durations]
    yield WorkCycle.trivial(origin)
    for k in range(1, k_max + 1):
        for interior in itertools.product(options, repeat=k):
            yield WorkCycle.sandwich(origin, interior)


def reachable_states(rho, F: ControlSet, origin: int, durations, k_max: int):
    """``[(cycle, final_state)]`` over :func:`enumerate_cycles` (a finite slice of Omega)."""
    out = []
    for cyc in enumerate_cycles(F, origin, durations, k_max):
        u = composite_propagator(cyc, F)
        out.append((cyc, u @ rho @ u.conj().T))
    return out


def states_contained(subset, superset, tol: float = 1e-8) -> bool:
    """Every state in ``subset`` matches some state of ``superset`` in trace distance."""
    return all(any(trace_distance(a, b) < tol for b in superset) for a in subset)
