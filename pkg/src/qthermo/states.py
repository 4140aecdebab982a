"""Density matrices, Gibbs states and the two information entropies.

Energies are in units where k_B = hbar = 1, entropies in nats.
"""
from __future__ import annotations

import numpy as np

from .config import TOL
from .errors import DomainError, TemperatureDivergesError, ValidationError
from .linalg import check_hermitian, eig_hermitian

_ENDPOINT_GAP = 1e-12


def validate_density(rho, name: str = "rho") -> np.ndarray:
    """Check hermiticity, unit trace and positivity; return the matrix."""
    m = check_hermitian(rho, name)
    tr = np.trace(m)
    if abs(tr - 1.0) > TOL.unit_trace:
        raise ValidationError(f"{name} has trace {tr.real:.12g}, expected 1")
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if lam.size and lam[0] < TOL.psd_floor:
        raise ValidationError(f"{name} has negative eigenvalue {lam[0]:.3e}")
    return m


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def _gibbs_weights(w: np.ndarray, beta: float) -> np.ndarray:
    """Normalized Boltzmann weights with a spectral shift against overflow."""
    if np.isinf(beta):
        target = w.min() if beta > 0 else w.max()
        p = (np.abs(w - target) <= 1e-12 * max(1.0, np.ptp(w))).astype(float)
    else:
        shift = w.min() if beta >= 0 else w.max()
        p = np.exp(-beta * (w - shift))
    return p / p.sum()


def log_partition(H, beta: float) -> float:
    w = np.linalg.eigvalsh(check_hermitian(H, "H"))
    if np.isinf(beta):
        raise DomainError("ln Z diverges at infinite beta")
    shift = w.min() if beta >= 0 else w.max()
    return float(-beta * shift + np.log(np.sum(np.exp(-beta * (w - shift)))))


def gibbs_state(H, beta: float, return_log_z: bool = False):
    """``exp(-beta H) / Z``; optionally also ``ln Z``.

    ``beta`` may be negative or infinite (ground/top projector, normalized).
    """
    w, v = eig_hermitian(H)
    p = _gibbs_weights(w, float(beta))
    rho = (v * p) @ v.conj().T
    if return_log_z:
        return rho, log_partition(H, beta)
    return rho


def entropy_of_spectrum(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho) -> float:
    """``-Tr rho ln rho`` with ``0 ln 0 = 0``."""
    m = validate_density(rho)
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return max(0.0, entropy_of_spectrum(np.clip(lam, 0.0, None)))


def relative_entropy(rho, mu) -> float:
    """``Tr rho ln rho - Tr rho ln mu``; ``inf`` if supp(rho) is not inside supp(mu)."""
    r = validate_density(rho, "rho")
    m = validate_density(mu, "mu")
    if r.shape != m.shape:
        raise ValidationError(f"dimension mismatch: {r.shape} vs {m.shape}")
    lam_r = np.clip(np.linalg.eigvalsh(0.5 * (r + r.conj().T)), 0.0, None)
    lam_m, vm = np.linalg.eigh(0.5 * (m + m.conj().T))
    # populations of rho in mu's eigenbasis
    q = np.real(np.einsum("ij,jk,ki->i", vm.conj().T, r, vm))
    outside = lam_m <= TOL.support
    if np.sum(q[outside]) > TOL.support:
        return float("inf")
    inside = ~outside
    value = -entropy_of_spectrum(lam_r) - float(np.sum(q[inside] * np.log(lam_m[inside])))
    return max(0.0, value)


def relative_entropy_gibbs(rho, H, beta: float) -> float:
    """``S(rho | exp(-beta H)/Z)`` using ``ln G = -beta H - ln Z`` exactly.

    Avoids taking logs of tiny Gibbs eigenvalues, which costs accuracy at
    large ``|beta| * spread``.
    """
    if np.isinf(beta):
        return relative_entropy(rho, gibbs_state(H, beta))
    h = check_hermitian(H, "H")
    r = validate_density(rho, "rho")
    lam = np.clip(np.linalg.eigvalsh(0.5 * (r + r.conj().T)), 0.0, None)
    value = -entropy_of_spectrum(lam) + beta * mean_energy(r, h) + log_partition(h, beta)
    return max(0.0, value)


def mean_energy(rho, H) -> float:
    return float(np.real(np.trace(np.asarray(rho) @ np.asarray(H))))


# ---------------------------------------------------------------------------
# energy <-> inverse temperature

def _mean_energy_at_beta(w: np.ndarray, beta: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)[..., None]
    shift = np.where(beta >= 0, w.min(), w.max())
    x = np.exp(-beta * (w - shift))
    return np.sum(x * w, axis=-1) / np.sum(x, axis=-1)


def _check_energy_domain(w: np.ndarray, u: np.ndarray) -> None:
    lo, hi = w[0], w[-1]
    span = hi - lo
    if span <= 0:
        raise DomainError("H has a single eigenvalue; beta(u, H) has an empty domain")
    if np.any(u < lo) or np.any(u > hi):
        raise DomainError(f"energy outside the open spectral interval ({lo:.6g}, {hi:.6g})")
    gap = _ENDPOINT_GAP * max(1.0, span)
    if np.any(u - lo <= gap) or np.any(hi - u <= gap):
        raise TemperatureDivergesError(
            "energy within 1e-12 of a spectral endpoint: temperature diverges"
        )


def betas_for_energies(w, u) -> np.ndarray:
    """Vectorized inverse of the Gibbs mean-energy map for eigenvalues ``w``.

    Bracket-expanding bisection on the whole real line; negative beta is
    returned for energies above ``mean(w)``.
    """
    w = np.sort(np.asarray(w, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _check_energy_domain(w, u)
    span = w[-1] - w[0]
    bound = 1.0 / span
    while True:
        e_hi, e_lo = _mean_energy_at_beta(w, np.full_like(u, -bound)), _mean_energy_at_beta(w, np.full_like(u, bound))
        if np.all(e_hi >= u) and np.all(e_lo <= u):
            break
        bound *= 2.0
    lo = np.full_like(u, -bound)  # small beta -> high energy
    hi = np.full_like(u, bound)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        e = _mean_energy_at_beta(w, mid)
        above = e > u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def beta_of_energy(H, u: float) -> float:
    """Inverse temperature at which the Gibbs mean energy of ``H`` equals ``u``."""
    w = np.linalg.eigvalsh(check_hermitian(H, "H"))
    return float(betas_for_energies(w, u)[0])


def gibbs_entropies_for_energies(w, u, clip_endpoints: bool = False) -> np.ndarray:
    """Entropy of the Gibbs state of spectrum ``w`` whose mean energy is ``u``.

    With ``clip_endpoints`` energies on (or within 1e-12 of) a spectral
    endpoint map to the limiting value ln(degeneracy) instead of raising.
    """
    w = np.sort(np.asarray(w, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty_like(u)
    if clip_endpoints:
        span = w[-1] - w[0]
        gap = _ENDPOINT_GAP * max(1.0, span)
        low = u - w[0] <= gap
        high = w[-1] - u <= gap
        tie = 1e-12 * max(1.0, span)
        out[low] = np.log(np.sum(np.abs(w - w[0]) <= tie))
        out[high] = np.log(np.sum(np.abs(w - w[-1]) <= tie))
        inner = ~(low | high)
    else:
        inner = np.ones(u.shape, dtype=bool)
    if np.any(inner):
        b = betas_for_energies(w, u[inner])
        shift = np.where(b >= 0, w[0], w[-1])[:, None]
        x = np.exp(-b[:, None] * (w - shift))
        p = x / x.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(p > 0, p * np.log(p), 0.0)
        out[inner] = -plogp.sum(axis=1)
    return out


def gibbs_entropy_at_energy(H, E: float) -> float:
    """Thermodynamic entropy at mean energy ``E``, anchored at ``ln d`` for beta = 0.

    Equals ``ln d + integral of beta(u, H) du`` from ``Tr H / d`` to ``E``.
    """
    w = np.linalg.eigvalsh(check_hermitian(H, "H"))
    return float(gibbs_entropies_for_energies(w, E)[0])


def thermal_entropy(H, beta: float) -> float:
    """``S(beta, H)``, the I-entropy of the Gibbs state."""
    w = np.linalg.eigvalsh(check_hermitian(H, "H"))
    return entropy_of_spectrum(_gibbs_weights(w, float(beta)))
