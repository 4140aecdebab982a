"""Reference numpy implementations of the candidate-evaluation kernels."""
import numpy as np

_CHUNK = 16384


def _composite(unitaries, seqs):
    n, k_max = seqs.shape
    d = unitaries.shape[1]
    v = np.broadcast_to(np.eye(d, dtype=complex), (n, d, d)).copy()
    for k in range(k_max):
        idx = seqs[:, k]
        live = idx >= 0
        if np.any(live):
            v[live] = unitaries[idx[live]] @ v[live]
    return v


def sequence_final_states(unitaries, seqs, rho):
    """``V rho V^dag`` for ``V = U[s_last] ... U[s_0]`` per row of ``seqs`` (-1 = skip)."""
    unitaries = np.ascontiguousarray(unitaries, dtype=complex)
    seqs = np.ascontiguousarray(seqs, dtype=np.int64)
    rho = np.ascontiguousarray(rho, dtype=complex)
    out = np.empty((seqs.shape[0],) + rho.shape, dtype=complex)
    for start in range(0, seqs.shape[0], _CHUNK):
        v = _composite(unitaries, seqs[start:start + _CHUNK])
        out[start:start + _CHUNK] = v @ rho @ np.conj(np.swapaxes(v, 1, 2))
    return out


def sequence_energies(unitaries, seqs, rho, h):
    """``Tr[h V rho V^dag]`` per row of ``seqs``."""
    h = np.ascontiguousarray(h, dtype=complex)
    seqs = np.ascontiguousarray(seqs, dtype=np.int64)
    out = np.empty(seqs.shape[0])
    for start in range(0, seqs.shape[0], _CHUNK):
        states = sequence_final_states(unitaries, seqs[start:start + _CHUNK], rho)
        out[start:start + _CHUNK] = np.einsum("ij,nji->n", h, states).real
    return out
