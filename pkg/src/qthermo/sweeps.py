"""Seeded randomized sweeps over the exact identities and inequalities.

Instance ``i`` of sweep ``name`` draws from ``stream(seed, offset(name) + i)``,
so results do not depend on how instances are split across threads.
"""
from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from .fluctuations import crooks_check, dissipation_irreversibility, jarzynski_check, tpm_distribution
from .measurement import (
    Instrument,
    apply_instrument,
    information_gain_bounds,
    joint_mutual_information,
    POINTER_DECOHERED,
    PREMEASUREMENT,
    random_nondestructive_instrument,
)
from .open_dynamics import data_processing_check
from .protocols import (
    ControlSet,
    WorkCycle,
    propagate_unitary,
    work_extracted_integral,
    work_extracted_two_point,
    work_relative_entropy_identity,
)
from .sampling import random_density, random_hermitian, random_kraus, random_unital_mixture, random_unitary, stream
from .states import gibbs_state, mean_energy, relative_entropy, thermal_entropy, von_neumann_entropy


class Sweep(NamedTuple):
    name: str
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray

    @property
    def worst(self) -> int:
        return int(np.argmax(self.residual))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual))


def _offset(name: str) -> int:
    return zlib.crc32(name.encode()) << 24


def _map(fn, name: str, n: int, seed: int, threads: int = 1):
    base = _offset(name)

    def one(i):
        return fn(stream(seed, base + i), i)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(n)))
    return [one(i) for i in range(n)]


def _pick(dims, i):
    return dims[i % len(dims)]


def random_cycle(d: int, rng, n_controls: int = 3, max_segments: int = 4):
    F = ControlSet(tuple(random_hermitian(d, rng) for _ in range(n_controls)))
    k = int(rng.integers(1, max_segments + 1))
    interior = [(int(rng.integers(0, n_controls)), float(rng.uniform(0.0, 2.0))) for _ in range(k)]
    return F, WorkCycle.sandwich(0, interior)


def thermo_stability_sweep(n: int, seed: int, dims=tuple(range(2, 9)), threads: int = 1) -> Sweep:
    """``S(rho|G) = S(beta,H) - S(rho) + beta (<H>_rho - <H>_G)`` on random instances."""
    def one(rng, i):
        d = _pick(dims, i)
        h = random_hermitian(d, rng)
        rho = random_density(d, rng)
        spread = float(np.ptp(np.linalg.eigvalsh(h)))
        # keep |beta| * spread <= 10 so every Gibbs weight stays well above the support threshold
        beta = float(rng.uniform(-2.0, 3.0)) * min(1.0, 10.0 / (3.0 * spread))
        g = gibbs_state(h, beta)
        lhs = relative_entropy(rho, g)
        rhs = thermal_entropy(h, beta) - von_neumann_entropy(rho) + beta * (mean_energy(rho, h) - mean_energy(g, h))
        return lhs, rhs

    out = np.array(_map(one, "thermo_stability", n, seed, threads))
    return Sweep("thermo_stability", out[:, 0], out[:, 1], np.abs(out[:, 0] - out[:, 1]))


def work_equivalence_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> Sweep:
    """Switch-instant work sum against the two-point energy difference."""
    def one(rng, i):
        F, cyc = random_cycle(_pick(dims, i), rng)
        rho = random_density(F.dim, rng)
        traj = propagate_unitary(cyc, F, rho)
        return work_extracted_integral(cyc, F, traj), work_extracted_two_point(cyc, F, rho)

    out = np.array(_map(one, "work_equivalence", n, seed, threads))
    return Sweep("work_equivalence", out[:, 0], out[:, 1], np.abs(out[:, 0] - out[:, 1]))


def gibbs_passivity_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> Sweep:
    """Extracted work from Gibbs(beta > 0, H) over random cycles; residual = max(0, W)."""
    def one(rng, i):
        F, cyc = random_cycle(_pick(dims, i), rng)
        g = gibbs_state(F[0], float(rng.uniform(0.05, 5.0)))
        return work_extracted_two_point(cyc, F, g), 0.0

    out = np.array(_map(one, "gibbs_passivity", n, seed, threads))
    return Sweep("gibbs_passivity", out[:, 0], out[:, 1], np.clip(out[:, 0], 0.0, None))


def work_entropy_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> Sweep:
    """``W = (S(rho_s|G) - S(rho_t|G)) / beta`` for random unitary cycles."""
    def one(rng, i):
        F, cyc = random_cycle(_pick(dims, i), rng)
        rho = random_density(F.dim, rng)
        beta = float(rng.uniform(0.1, 3.0)) * (1 if rng.random() < 0.8 else -1)
        return work_relative_entropy_identity(cyc, F, rho, beta)

    out = np.array(_map(one, "work_entropy", n, seed, threads))
    return Sweep("work_entropy", out[:, 0], out[:, 1], np.abs(out[:, 0] - out[:, 1]))


def _random_driving(d, rng):
    h_i = random_hermitian(d, rng)
    h_f = random_hermitian(d, rng)
    u = random_unitary(d, rng)
    return h_i, u, h_f, float(rng.uniform(0.1, 3.0))


def jarzynski_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> Sweep:
    def one(rng, i):
        h_i, u, h_f, beta = _random_driving(_pick(dims, i), rng)
        rep = jarzynski_check(tpm_distribution(h_i, u, h_f, beta))
        return rep.lhs, rep.rhs

    out = np.array(_map(one, "jarzynski", n, seed, threads))
    return Sweep("jarzynski", out[:, 0], out[:, 1], np.abs(out[:, 0] - out[:, 1]))


def unital_jarzynski_sweep(n: int, seed: int, dims=(2, 3, 4), n_terms: int = 3, threads: int = 1) -> Sweep:
    """Jarzynski for a random mixture of unitaries (same Hamiltonian before and after)."""
    def one(rng, i):
        d = _pick(dims, i)
        h = random_hermitian(d, rng)
        kraus = random_unital_mixture(d, n_terms, rng)
        rep = jarzynski_check(tpm_distribution(h, None, h, float(rng.uniform(0.1, 3.0)), kraus=kraus))
        return rep.lhs, rep.rhs

    out = np.array(_map(one, "unital_jarzynski", n, seed, threads))
    return Sweep("unital_jarzynski", out[:, 0], out[:, 1], np.abs(out[:, 0] - out[:, 1]))


def crooks_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> Sweep:
    """Worst pointwise ``|ln P_F(W)/P_R(-W) - beta (W - dF)|`` per instance."""
    def one(rng, i):
        h_i, u, h_f, beta = _random_driving(_pick(dims, i), rng)
        rep = crooks_check(tpm_distribution(h_i, u, h_f, beta), h_i, u, h_f)
        worst = max(rep.points, key=lambda p: abs(p[3] - p[4]))
        return worst[3], worst[4]

    out = np.array(_map(one, "crooks", n, seed, threads))
    return Sweep("crooks", out[:, 0], out[:, 1], np.abs(out[:, 0] - out[:, 1]))


def arrow_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> Sweep:
    def one(rng, i):
        h_i, u, h_f, beta = _random_driving(_pick(dims, i), rng)
        rep = dissipation_irreversibility(h_i, u, h_f, beta)
        return rep.lhs, rep.rhs

    out = np.array(_map(one, "arrow", n, seed, threads))
    return Sweep("arrow_of_time", out[:, 0], out[:, 1], np.abs(out[:, 0] - out[:, 1]))


def dpi_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> Sweep:
    """``S(T rho | T mu) <= S(rho | mu)``; residual = max(0, after - before)."""
    def one(rng, i):
        d = _pick(dims, i)
        kraus = random_kraus(d, int(rng.integers(1, 4)), rng)
        rho, mu = random_density(d, rng), random_density(d, rng)
        res = data_processing_check(kraus, rho, mu)
        return res.after, res.before

    out = np.array(_map(one, "dpi", n, seed, threads))
    return Sweep("data_processing", out[:, 0], out[:, 1], np.clip(out[:, 0] - out[:, 1], 0.0, None))


def information_gain_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1):
    """``0 <= gain <= I{p_k}`` for random non-destructive instruments.

    Returns ``(lower, upper)`` sweeps whose residuals are the violations.
    """
    def one(rng, i):
        d = _pick(dims, i)
        rho = random_density(d, rng)
        inst = random_nondestructive_instrument(
            rho, int(rng.integers(2, 5)), rng, kraus_per_outcome=int(rng.integers(1, 3))
        )
        g = information_gain_bounds(rho, apply_instrument(rho, inst))
        return g.gain, g.upper

    out = np.array(_map(one, "information_gain", n, seed, threads))
    zero = np.zeros(len(out))
    lower = Sweep("information_gain_lower", zero, out[:, 0], np.clip(-out[:, 0], 0.0, None))
    upper = Sweep("information_gain_upper", out[:, 0], out[:, 1], np.clip(out[:, 0] - out[:, 1], 0.0, None))
    return lower, upper


def premeasurement_sweep(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> Sweep:
    """``I{p_k} <= C12`` for rank-1 projective measurements in random bases (premeasurement dilation)."""
    def one(rng, i):
        d = _pick(dims, i)
        rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        info = joint_mutual_information(rho, Instrument.projective(random_unitary(d, rng)), PREMEASUREMENT)
        return info.shannon, info.c12

    out = np.array(_map(one, "premeasurement", n, seed, threads))
    return Sweep("premeasurement_c12", out[:, 0], out[:, 1], np.clip(out[:, 0] - out[:, 1], 0.0, None))


def c12_tally(n: int, seed: int, dims=(2, 3, 4), threads: int = 1) -> dict:
    """How often ``I{p_k} <= C12`` holds for general random instruments, per dilation mode (reported only)."""
    def one(rng, i):
        d = _pick(dims, i)
        rho = random_density(d, rng)
        m = int(rng.integers(2, 5))
        kraus = random_kraus(d, m, rng)
        inst = Instrument(tuple((k,) for k in kraus))
        return tuple(joint_mutual_information(rho, inst, mode).bound_holds for mode in (PREMEASUREMENT, POINTER_DECOHERED))

    out = _map(one, "c12_tally", n, seed, threads)
    return {
        "instances": n,
        PREMEASUREMENT: int(sum(a for a, _ in out)),
        POINTER_DECOHERED: int(sum(b for _, b in out)),
    }

