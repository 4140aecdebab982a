"""Thermal Lindblad generators, open-system propagation and heat accounting.

Heat sign: ``heat_to_bath > 0`` means energy flowed from the system into the
bath; the bath entropy change is ``beta_R * heat_to_bath``.

Superoperators act on row-major vectorized matrices, for which
``vec(A X B) = kron(A, B.T) @ vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .config import TOL
from .errors import DomainError, NumericalError, ValidationError
from .linalg import as_matrix, check_hermitian, unitary_propagator
from .states import entropy_of_spectrum, mean_energy, relative_entropy, validate_density

_ZERO_OP = 1e-14


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    """``L(rho) = -i[H, rho] + sum_k r_k (A_k rho A_k^dag - {A_k^dag A_k, rho}/2)``.

    ``bohr_frequencies`` (optional, one per jump) is the energy each jump
    hands to the bath; it is what the detailed-balance check reads.
    """

    hamiltonian: np.ndarray
    jumps: tuple
    bath_beta: float = np.inf
    label: str = "R"
    bohr_frequencies: tuple | None = None

    def __post_init__(self):
        h = check_hermitian(self.hamiltonian, "generator Hamiltonian")
        jumps = []
        for k, (op, rate) in enumerate(self.jumps):
            a = as_matrix(op, f"jump {k}")
            if a.shape != h.shape:
                raise ValidationError(f"jump {k} has shape {a.shape}, Hamiltonian {h.shape}")
            if not np.isfinite(rate) or rate < 0:
                raise ValidationError(f"jump {k} has negative or non-finite rate {rate}")
            jumps.append((a, float(rate)))
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(jumps))
        object.__setattr__(self, "_cache", {})

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def dissipator(self, rho) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        for a, r in self.jumps:
            ada = a.conj().T @ a
            out += r * (a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada))
        return out

    def __call__(self, rho) -> np.ndarray:
        h = self.hamiltonian
        return -1j * (h @ rho - rho @ h) + self.dissipator(rho)

    def superoperator(self) -> np.ndarray:
        if "super" not in self._cache:
            d = self.dim
            eye = np.eye(d)
            h = self.hamiltonian
            sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
            for a, r in self.jumps:
                ada = a.conj().T @ a
                sup = sup + r * (np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T))
            self._cache["super"] = sup
        return self._cache["super"]

    def propagator(self, t: float) -> np.ndarray:
        """``exp(t L)`` on vectorized states (Pade scaling-and-squaring)."""
        key = ("exp", float(t))
        if key not in self._cache:
            self._cache[key] = scipy.linalg.expm(t * self.superoperator())
        return self._cache[key]

    def evolve(self, rho, t: float) -> np.ndarray:
        d = self.dim
        return (self.propagator(t) @ np.asarray(rho, dtype=complex).reshape(-1)).reshape(d, d)

    def embed(self, dims: Sequence[int], position: int) -> "LindbladGenerator":
        """Same generator acting on factor ``position`` of a tensor product."""
        eyes = [np.eye(d) for d in dims]

        def lift(op):
            mats = list(eyes)
            mats[position] = op
            out = mats[0]
            for m in mats[1:]:
                out = np.kron(out, m)
            return out

        return LindbladGenerator(
            lift(self.hamiltonian),
            tuple((lift(a), r) for a, r in self.jumps),
            self.bath_beta,
            self.label,
            self.bohr_frequencies,
        )


def combine_generators(*gens: LindbladGenerator, label: str | None = None) -> LindbladGenerator:
    """Sum of generators on the same space (all must share the bath temperature)."""
    betas = {g.bath_beta for g in gens}
    if len(betas) != 1:
        raise ValidationError("combined generators must share one bath temperature")
    h = sum(g.hamiltonian for g in gens)
    jumps = tuple(j for g in gens for j in g.jumps)
    freqs = None
    if all(g.bohr_frequencies is not None for g in gens):
        freqs = tuple(f for g in gens for f in g.bohr_frequencies)
    return LindbladGenerator(h, jumps, betas.pop(), label or gens[0].label, freqs)


def product_generator(g1: LindbladGenerator, g2: LindbladGenerator, label: str | None = None):
    """Independent baths on the two factors of ``S1 x S2`` (no cross terms)."""
    dims = (g1.dim, g2.dim)
    return combine_generators(g1.embed(dims, 0), g2.embed(dims, 1), label=label)


def bose_occupation(omega: float, beta: float) -> float:
    if np.isinf(beta):
        return 0.0
    return 1.0 / np.expm1(beta * omega)


def davies_generator(H, coupling, beta: float, gamma0: float, label: str = "R") -> LindbladGenerator:
    """Weak-coupling thermal generator for system ``H`` coupled through ``coupling``.

    Each downward transition between distinct levels gets rate
    ``gamma0 (N + 1)``, its reverse ``gamma0 N`` with ``N = 1/(exp(beta w) - 1)``;
    the diagonal (w = 0) part dephases at ``gamma0 / 2``.
    """
    h = check_hermitian(H, "H")
    a = check_hermitian(coupling, "coupling")
    if not (beta > 0):
        raise DomainError("Davies generator needs beta > 0 (use np.inf for zero temperature)")
    if gamma0 < 0:
        raise ValidationError("gamma0 must be non-negative")
    w, v = np.linalg.eigh(h)
    span = max(1.0, float(np.ptp(w)))
    tol = 1e-9 * span
    # distinct levels and their eigen-projectors
    levels, projs = [], []
    for e, vec in zip(w, v.T):
        if levels and abs(e - levels[-1]) <= tol:
            projs[-1] = projs[-1] + np.outer(vec, vec.conj())
        else:
            levels.append(e)
            projs.append(np.outer(vec, vec.conj()))
    jumps, freqs, seen = [], [], []
    for lo in range(len(levels)):
        for hi in range(lo + 1, len(levels)):
            lower = projs[lo] @ a @ projs[hi]
            if np.max(np.abs(lower)) < _ZERO_OP:
                continue
            omega = levels[hi] - levels[lo]
            if any(abs(omega - s) <= tol for s in seen):
                raise ValidationError(
                    f"degenerate Bohr frequency {omega:.6g}: specify the jump operators explicitly"
                )
            seen.append(omega)
            n = bose_occupation(omega, beta)
            jumps.append((lower, gamma0 * (n + 1.0)))
            freqs.append(omega)
            if n > 0:
                jumps.append((lower.conj().T, gamma0 * n))
                freqs.append(-omega)
    dephase = sum(p @ a @ p for p in projs)
    if np.max(np.abs(dephase)) >= _ZERO_OP:
        jumps.append((dephase, 0.5 * gamma0))
        freqs.append(0.0)
    return LindbladGenerator(h, tuple(jumps), float(beta), label, tuple(freqs))


def detailed_balance_residual(gen: LindbladGenerator) -> float:
    """Max deviation of ``rate(-w)/rate(w)`` from ``exp(-beta w)`` over paired jumps."""
    if gen.bohr_frequencies is None:
        raise ValidationError("generator carries no Bohr-frequency labels")
    worst = 0.0
    by_freq = {}
    for (a, r), f in zip(gen.jumps, gen.bohr_frequencies):
        by_freq.setdefault(round(f, 12), []).append(r)
    for f, rates in by_freq.items():
        if f <= 0:
            continue
        up = by_freq.get(round(-f, 12), [0.0])
        ratio = up[0] / rates[0] if rates[0] > 0 else 0.0
        target = 0.0 if np.isinf(gen.bath_beta) else np.exp(-gen.bath_beta * f)
        worst = max(worst, abs(ratio - target))
    return worst


# ---------------------------------------------------------------------------
# propagation

@dataclass
class OpenTrajectory:
    times: list
    states: list
    heat_to_bath: dict
    work_accumulated: float
    first_law_residual: float
    entropy_production_rates: list = field(default_factory=list)
    heat_refinement_change: float = 0.0
    flagged: bool = False

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def total_heat(self) -> float:
        return float(sum(self.heat_to_bath.values()))


def _simpson(f: np.ndarray, h: float) -> float:
    return float(h / 3.0 * (f[0] + f[-1] + 4.0 * np.sum(f[1:-1:2]) + 2.0 * np.sum(f[2:-1:2])))


def _check_state(rho, d, where):
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise NumericalError(f"trace drift {tr - 1.0:.2e} at {where}; refine the substeps")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam[0] < -1e-8:
        raise NumericalError(f"state lost positivity (eigenvalue {lam[0]:.2e}) at {where}")
    return lam


def propagate_lindblad(schedule, rho0, origin=None, substeps: int = 64, max_substeps: int = 8192) -> OpenTrajectory:
    """Run a schedule of ``(generator_or_hamiltonian, duration)`` segments.

    Plain Hermitian matrices are unitary segments.  Work is accrued at each
    Hamiltonian switch (including from/to ``origin`` when given), heat per
    dissipative segment by Simpson quadrature of ``-Tr[H D(rho)]`` on
    at least ``substeps`` sub-intervals.  The substep count doubles until
    doubling changes the heat by less than 1e-7 (the finer value is kept); if
    ``max_substeps`` is hit with a change above 1e-6 the run is ``flagged``.
    """
    if substeps < 2 or substeps % 2:
        raise ValidationError("substeps must be a positive even number")
    rho = validate_density(rho0, "rho0").astype(complex)
    d = rho.shape[0]
    segs = []
    for item, tau in schedule:
        if not np.isfinite(tau) or tau < 0:
            raise ValidationError(f"invalid segment duration {tau}")
        if isinstance(item, LindbladGenerator):
            if item.dim != d:
                raise ValidationError("generator dimension does not match the state")
            segs.append((item, item.hamiltonian, float(tau)))
        else:
            h = check_hermitian(item, "segment Hamiltonian")
            if h.shape[0] != d:
                raise ValidationError("segment Hamiltonian dimension does not match the state")
            segs.append((None, h, float(tau)))
    h_start = check_hermitian(origin, "origin") if origin is not None else (segs[0][1] if segs else None)
    if h_start is None:
        return OpenTrajectory([0.0], [rho], {}, 0.0, 0.0)
    e_start = mean_energy(rho, h_start)

    times, states = [0.0], [rho]
    heat: dict = {}
    work = 0.0
    production = []
    worst_change = 0.0
    t = 0.0
    h_prev = h_start
    for k, (gen, h, tau) in enumerate(segs):
        work -= mean_energy(rho, h - h_prev)
        h_prev = h
        if tau == 0:
            continue
        if gen is None:
            u = unitary_propagator(h, tau)
            rho = u @ rho @ u.conj().T
            t += tau
            times.append(t)
            states.append(rho)
            continue
        n = substeps
        while True:
            dt = tau / n
            # fine grid at dt/2 gives the doubled quadrature and per-substep midpoints
            step = gen.propagator(0.5 * dt)
            fine = [rho]
            for _ in range(2 * n):
                fine.append((step @ fine[-1].reshape(-1)).reshape(d, d))
            f = np.array([-mean_energy(gen.dissipator(s), h) for s in fine])
            q_coarse = _simpson(f[::2], dt)
            q_fine = _simpson(f, 0.5 * dt)
            change = abs(q_fine - q_coarse)
            if change < 1e-7 or n >= max_substeps:
                break
            n *= 2
        worst_change = max(worst_change, change)
        heat[gen.label] = heat.get(gen.label, 0.0) + q_fine
        ent = []
        for j in range(0, 2 * n + 1, 2):
            lam = _check_state(fine[j], d, f"segment {k}, substep {j // 2}")
            ent.append(entropy_of_spectrum(np.clip(lam, 0.0, None)))
            if j:
                times.append(t + 0.5 * j * dt)
                states.append(fine[j])
        if np.isfinite(gen.bath_beta):
            for i in range(n):
                dq = 0.5 * dt / 3.0 * (f[2 * i] + 4 * f[2 * i + 1] + f[2 * i + 2])
                production.append((ent[i + 1] - ent[i] + gen.bath_beta * dq) / dt)
        rho = fine[-1]
        t += tau
    if origin is not None:
        work -= mean_energy(rho, h_start - h_prev)
        h_end = h_start
    else:
        h_end = h_prev
    e_end = mean_energy(rho, h_end)
    residual = (e_end - e_start) + work + sum(heat.values())
    return OpenTrajectory(
        times, states, heat, work, residual, production, worst_change, worst_change > 1e-6
    )


# ---------------------------------------------------------------------------
# channels

class DPIResult(NamedTuple):
    before: float
    after: float
    holds: bool


def check_kraus(kraus, tol: float = TOL.kraus_completeness):
    ops = [as_matrix(k, "Kraus operator") for k in kraus]
    if not ops:
        raise ValidationError("empty Kraus set")
    d_in = ops[0].shape[1]
    total = sum(k.conj().T @ k for k in ops)
    dev = float(np.max(np.abs(total - np.eye(d_in))))
    if dev > tol:
        raise ValidationError(f"Kraus set is not trace preserving: max |sum K^dag K - I| = {dev:.2e}")
    return ops


def apply_channel(kraus, rho) -> np.ndarray:
    ops = check_kraus(kraus)
    rho = np.asarray(rho, dtype=complex)
    return sum(k @ rho @ k.conj().T for k in ops)


def data_processing_check(kraus, rho, mu, slack: float = 1e-9) -> DPIResult:
    """``S(T rho | T mu) <= S(rho | mu)`` for the channel ``T`` given by ``kraus``."""
    before = relative_entropy(rho, mu)
    after = relative_entropy(apply_channel(kraus, rho), apply_channel(kraus, mu))
    return DPIResult(before, after, after <= before + slack)


def completely_depolarizing_kraus(d: int):
    out = []
    for i in range(d):
        for j in range(d):
            k = np.zeros((d, d), dtype=complex)
            k[i, j] = 1.0 / np.sqrt(d)
            out.append(k)
    return out
