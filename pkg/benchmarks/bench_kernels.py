"""Compare the compiled and numpy candidate-evaluation kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from qthermo.kernels import _pykernels
from qthermo.sampling import random_density, random_hermitian, random_unitary, stream

try:
    from qthermo.kernels import _ckernels
except ImportError:
    _ckernels = None


def instance(d, n_options, k_max):
    rng = stream(0, d * 1000 + k_max)
    us = np.stack([random_unitary(d, rng) for _ in range(n_options)])
    rows = [np.full(k_max, -1)]
    for k in range(1, k_max + 1):
        grid = np.stack(np.meshgrid(*[np.arange(n_options)] * k, indexing="ij"), -1).reshape(-1, k)
        rows.append(np.hstack([grid, np.full((len(grid), k_max - k), -1)]))
    seqs = np.vstack([np.atleast_2d(r) for r in rows]).astype(np.int64)
    return us, seqs, random_density(d, rng), random_hermitian(d, rng)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = [(2, 24, 2), (2, 24, 3), (3, 12, 3), (4, 10, 3)]
    print(f"{'d':>2} {'options':>7} {'k_max':>5} {'candidates':>10} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for d, m, k in cases:
        us, seqs, rho, h = instance(d, m, k)
        py = min(timeit.repeat(lambda: _pykernels.sequence_energies(us, seqs, rho, h), number=1, repeat=args.repeat))
        if _ckernels is not None:
            cy = min(timeit.repeat(lambda: _ckernels.sequence_energies(us, seqs, rho, h), number=1, repeat=args.repeat))
            a = _pykernels.sequence_energies(us, seqs, rho, h)
            b = _ckernels.sequence_energies(us, seqs, rho, h)
            assert np.abs(a - b).max() < 1e-12
            print(f"{d:>2} {m:>7} {k:>5} {len(seqs):>10} {1e3 * py:>10.2f} {1e3 * cy:>10.2f} {py / cy:>7.1f}x")
        else:
            print(f"{d:>2} {m:>7} {k:>5} {len(seqs):>10} {1e3 * py:>10.2f} {'n/a':>10} {'n/a':>8}")


if __name__ == "__main__":
    main()
