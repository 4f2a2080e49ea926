"""Hot numerical kernels with two interchangeable implementations.

The numba implementation (loop nests, @njit, disk-cached) is the default
when numba imports cleanly; the pure-numpy implementation (sliced array
arithmetic) is the fallback and the reference in the cross-backend tests.

Selection: set EXTMA_BACKEND=numpy or EXTMA_BACKEND=numba before import;
anything else (or unset) means "numba if available".
"""

from __future__ import annotations

import os

from . import stencil_numpy
from . import interp_numpy

_requested = os.environ.get("EXTMA_BACKEND", "auto").lower()

if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"EXTMA_BACKEND={_requested!r}: use auto, numba or numpy")

_numba_mods = None
if _requested in ("auto", "numba"):
    try:
        from . import stencil_numba, interp_numba

        _numba_mods = (stencil_numba, interp_numba)
    except ImportError:
        if _requested == "numba":
            raise
        _numba_mods = None

BACKEND = "numba" if _numba_mods is not None else "numpy"

if BACKEND == "numba":
    _stencil, _interp = _numba_mods
else:
    _stencil, _interp = stencil_numpy, interp_numpy

assemble_2d = _stencil.assemble_2d
assemble_3d = _stencil.assemble_3d
patch_eval_2d = _interp.patch_eval_2d
patch_eval_3d = _interp.patch_eval_3d


def backend_module_pair():
    """(active, reference) stencil/interp module pairs, for benchmarks and tests."""
    return {
        "numpy": (stencil_numpy, interp_numpy),
        "numba": _numba_mods,
    }
