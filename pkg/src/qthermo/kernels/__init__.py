"""Candidate-evaluation kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it was built; set ``QTHERMO_PURE_PYTHON=1``
to force the fallback.  ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels

if os.environ.get("QTHERMO_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

sequence_final_states = _impl.sequence_final_states
sequence_energies = _impl.sequence_energies

__all__ = ["BACKEND", "sequence_final_states", "sequence_energies"]
