"""Random test instances and deterministic seed fan-out."""
from __future__ import annotations

import numpy as np


def stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for sweep ``index`` under a 64-bit ``seed``.

    Streams for different indices are independent and do not depend on the
    order in which they are created, so parallel sweeps stay reproducible.
    """
    key = np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (a + a.conj().T)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a Ginibre matrix with phase fix)."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt-type random state of the given rank (full rank by default)."""
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(d, rng, rank=1)


def random_kraus(d: int, n_ops: int, rng: np.random.Generator, d_out: int | None = None):
    """Kraus operators of a random CPTP map (isometry slices of a Haar unitary)."""
    d_out = d if d_out is None else d_out
    if d_out * n_ops < d:
        raise ValueError("need d_out * n_ops >= d for a trace-preserving map")
    v = random_unitary(d_out * n_ops, rng)[:, :d]  # isometry C^d -> C^(d_out*n_ops)
    return [v[k * d_out:(k + 1) * d_out, :] for k in range(n_ops)]


def random_unital_mixture(d: int, n_terms: int, rng: np.random.Generator):
    """Kraus set ``sqrt(q_j) U_j`` of a random mixture of unitaries."""
    q = rng.dirichlet(np.ones(n_terms))
    return [np.sqrt(qj) * random_unitary(d, rng) for qj in q]
