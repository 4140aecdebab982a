"""Two-point-measurement work statistics and exact fluctuation relations.

Work here is work done ON the system, ``W_on = -W_extracted`` relative to
:mod:`qthermo.protocols`.  Free energies use ``F = -ln(Z) / beta``.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import QThermoError, ValidationError
from .linalg import check_hermitian, is_unitary
from .states import gibbs_state, log_partition, mean_energy, relative_entropy_gibbs


def eigenprojectors(H, rel_tol: float = 1e-10):
    """Distinct eigenvalues of ``H`` and the projectors onto their eigenspaces."""
    w, v = np.linalg.eigh(check_hermitian(H, "H"))
    tol = rel_tol * max(1.0, float(np.ptp(w)))
    levels, projs = [], []
    for e, vec in zip(w, v.T):
        p = np.outer(vec, vec.conj())
        if levels and abs(e - levels[-1]) <= tol:
            projs[-1] += p
        else:
            levels.append(float(e))
            projs.append(p)
    return np.array(levels), projs


@dataclass
class WorkDistribution:
    work: np.ndarray
    probability: np.ndarray
    initial_levels: np.ndarray
    final_levels: np.ndarray
    joint: np.ndarray  # joint[m, n] = P(first = level m, second = level n)
    beta: float
    log_z_initial: float
    log_z_final: float
    propagator_hash: str

    @property
    def free_energy_change(self) -> float:
        return -(self.log_z_final - self.log_z_initial) / self.beta

    @property
    def mean_work(self) -> float:
        return float(np.sum(self.work * self.probability))

    def probability_of(self, w: float, tol: float = 1e-9) -> float:
        hit = np.abs(self.work - w) <= tol
        return float(np.sum(self.probability[hit]))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Monte Carlo draws, for plots only."""
        return rng.choice(self.work, size=n, p=self.probability / self.probability.sum())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["work", "probability"])
            for w, p in zip(self.work, self.probability):
                out.writerow([repr(float(w)), repr(float(p))])


def _hash(ops) -> str:
    h = hashlib.sha256()
    for op in ops:
        h.update(np.ascontiguousarray(op, dtype=complex).tobytes())
    return h.hexdigest()[:16]


def tpm_distribution(H_i, U, H_f, beta: float, kraus=None) -> WorkDistribution:
    """Exact TPM work distribution for a Gibbs(beta, H_i) start.

    ``U`` is the composite propagator; pass ``U=None`` and ``kraus`` for a
    unital channel given by its Kraus operators.  Measurements project onto
    eigenspaces, so degenerate spectra are handled basis-independently.
    """
    h_i = check_hermitian(H_i, "H_i")
    h_f = check_hermitian(H_f, "H_f")
    if kraus is None:
        u = np.asarray(U, dtype=complex)
        if not is_unitary(u):
            raise ValidationError("propagator is not unitary within 1e-9")
        ops = [u]
    else:
        ops = [np.asarray(k, dtype=complex) for k in kraus]
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(h_i.shape[0]))) > 1e-9:
            raise ValidationError("Kraus set is not trace preserving")
    lev_i, proj_i = eigenprojectors(h_i)
    lev_f, proj_f = eigenprojectors(h_f)
    shift = lev_i.min() if beta >= 0 else lev_i.max()
    boltz = np.exp(-beta * (lev_i - shift))
    z = float(np.sum(boltz * np.array([np.trace(p).real for p in proj_i])))
    joint = np.zeros((len(lev_i), len(lev_f)))
    for m, pm in enumerate(proj_i):
        moved = [k @ pm @ k.conj().T for k in ops]
        for n, pn in enumerate(proj_f):
            joint[m, n] = boltz[m] / z * sum(np.trace(pn @ x).real for x in moved)
    work_grid = lev_f[None, :] - lev_i[:, None]
    flat_w, flat_p = work_grid.ravel(), joint.ravel()
    order = np.argsort(flat_w, kind="stable")
    flat_w, flat_p = flat_w[order], flat_p[order]
    span = max(1.0, float(np.ptp(flat_w)))
    works, probs = [], []
    for w, p in zip(flat_w, flat_p):
        if works and abs(w - works[-1]) <= 1e-10 * span:
            probs[-1] += p
        else:
            works.append(w)
            probs.append(p)
    return WorkDistribution(
        np.array(works), np.array(probs), lev_i, lev_f, joint, float(beta),
        log_partition(h_i, beta), log_partition(h_f, beta), _hash(ops),
    )


class JarzynskiReport(NamedTuple):
    lhs: float
    rhs: float
    residual: float
    mean_work: float
    free_energy_change: float
    jensen_gap: float


def jarzynski_check(dist: WorkDistribution) -> JarzynskiReport:
    """``<exp(-beta W)>`` against ``exp(-beta dF)``, plus ``<W> - dF``."""
    b = dist.beta
    lhs = float(np.sum(dist.probability * np.exp(-b * dist.work)))
    dF = dist.free_energy_change
    rhs = float(np.exp(-b * dF))
    return JarzynskiReport(lhs, rhs, abs(lhs - rhs), dist.mean_work, dF, dist.mean_work - dF)


class CrooksReport(NamedTuple):
    max_residual: float
    points: list  # (W, P_F(W), P_R(-W), log ratio, beta (W - dF))
    reverse: WorkDistribution


def crooks_check(forward: WorkDistribution, H_i, U, H_f, support: float = 1e-12) -> CrooksReport:
    """Pointwise ``ln[P_F(W)/P_R(-W)] = beta (W - dF)``.

    The reverse process starts in Gibbs(beta, H_f) and runs ``U^dag`` back to H_i.
    """
    u = np.asarray(U, dtype=complex)
    rev = tpm_distribution(H_f, u.conj().T, H_i, forward.beta)
    b, dF = forward.beta, forward.free_energy_change
    span = max(1.0, float(np.ptp(forward.work)))
    points, worst = [], 0.0
    for w, p in zip(forward.work, forward.probability):
        if p <= support:
            continue
        pr = rev.probability_of(-w, tol=1e-9 * span)
        if pr <= 0:
            raise QThermoError(f"reverse probability vanishes at W = {-w:.6g} while P_F({w:.6g}) = {p:.3e}")
        ratio = float(np.log(p / pr))
        target = b * (w - dF)
        worst = max(worst, abs(ratio - target))
        points.append((float(w), float(p), float(pr), ratio, float(target)))
    return CrooksReport(worst, points, rev)


class ArrowReport(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def dissipation_irreversibility(H_i, U, H_f, beta: float) -> ArrowReport:
    """``beta (<W> - dF) = S(rho(tau) | Gibbs(beta, H_f))`` at the final time."""
    h_i = check_hermitian(H_i, "H_i")
    h_f = check_hermitian(H_f, "H_f")
    u = np.asarray(U, dtype=complex)
    rho0 = gibbs_state(h_i, beta)
    rho_t = u @ rho0 @ u.conj().T
    mean_w = mean_energy(rho_t, h_f) - mean_energy(rho0, h_i)
    dF = -(log_partition(h_f, beta) - log_partition(h_i, beta)) / beta
    lhs = beta * (mean_w - dF)
    rhs = relative_entropy_gibbs(rho_t, h_f, beta)
    return ArrowReport(float(lhs), float(rhs), float(abs(lhs - rhs)))
