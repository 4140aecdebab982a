"""Dense complex linear algebra for small Hilbert spaces.

Index convention: in ``tensor(A, B)`` and ``partial_trace`` subsystem 0 is the
slow (most significant) index, matching ``numpy.kron``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .config import TOL
from .errors import NumericalError, ValidationError

_EXP_OVERFLOW = 700.0


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def hermiticity_deviation(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(a, name: str = "operator", tol: float = TOL.hermiticity) -> np.ndarray:
    """Return ``a`` as a complex array, raising if it is not square Hermitian."""
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")
    dev = hermiticity_deviation(m)
    if dev > tol:
        raise ValidationError(f"{name} is not Hermitian: max |A - A^dag| = {dev:.3e} > {tol:.1e}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def eig_hermitian(a):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and a unitary whose columns are the
    eigenvectors, so that ``a = V @ diag(w) @ V^dag``.
    """
    m = check_hermitian(a)
    # symmetrize so round-off in the lower triangle cannot leak in
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return w, v


def expm_hermitian(a, scale: complex = 1.0) -> np.ndarray:
    """``exp(scale * a)`` for Hermitian ``a`` via its spectral decomposition."""
    if not np.isfinite(scale):
        raise ValidationError("scale must be finite")
    w, v = eig_hermitian(a)
    z = scale * w
    top = float(np.max(z.real)) if z.size else 0.0
    if top > _EXP_OVERFLOW:
        raise NumericalError(
            f"exp overflow: Re(scale*lambda_max) = {top:.1f} > {_EXP_OVERFLOW}; "
            "shift the spectrum (e.g. subtract lambda_min) before exponentiating"
        )
    return (v * np.exp(z)) @ v.conj().T


def unitary_propagator(h, t: float) -> np.ndarray:
    """``exp(-i h t)``."""
    return expm_hermitian(h, -1j * t)


def tensor(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, as_matrix(op))
    return out


def partial_trace(rho, dims: Sequence[int], keep) -> np.ndarray:
    """Reduced operator on the subsystems listed in ``keep`` (0-based)."""
    m = as_matrix(rho, "rho")
    dims = tuple(int(d) for d in dims)
    n = int(np.prod(dims))
    if m.shape != (n, n):
        raise ValidationError(f"operator of shape {m.shape} does not match dims {dims}")
    keep = sorted({keep} if np.isscalar(keep) else set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValidationError(f"keep={keep} out of range for {len(dims)} subsystems")
    nsub = len(dims)
    t = m.reshape(dims + dims)
    traced = [k for k in range(nsub) if k not in keep]
    # contract traced axes pairwise from the highest index down
    for k in sorted(traced, reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + cur)
        nsub -= 1
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b`` for Hermitian arguments."""
    d = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def is_unitary(u, tol: float = TOL.unitarity) -> bool:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


# Pauli matrices, used by presets and tests.
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, lowers diag(0,1)
