"""Hot numeric kernels with a selectable backend.

Set ``ICAE_BACKEND=numpy`` to force the pure-numpy path; the default is
``numba`` when it imports, else numpy. Both backends expose the same
functions and agree to floating-point rounding (not bit-for-bit, since the
summation order differs from BLAS).
"""

import os

from . import _numpy as numpy_kernels

_requested = os.environ.get("ICAE_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"ICAE_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    if _requested != "numba":
        raise ImportError
    from . import _numba as numba_kernels
except ImportError:
    numba_kernels = None

if numba_kernels is not None:
    active = numba_kernels
    BACKEND = "numba"
else:
    active = numpy_kernels
    BACKEND = "numpy"

LINEAR, RELU, ELU, TANH, SOFTMAX = (
    numpy_kernels.LINEAR,
    numpy_kernels.RELU,
    numpy_kernels.ELU,
    numpy_kernels.TANH,
    numpy_kernels.SOFTMAX,
)

__all__ = ["BACKEND", "active", "numpy_kernels", "numba_kernels"]
