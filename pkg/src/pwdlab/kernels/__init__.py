"""Backend dispatch for the numeric hot loops.

Two interchangeable implementations exist: numba-compiled loops
(:mod:`pwdlab.kernels.numba_impl`) and plain numpy
(:mod:`pwdlab.kernels.numpy_impl`). Selection order:

1. ``PWDLAB_BACKEND`` environment variable, ``"numba"`` or ``"numpy"``;
2. numba when importable, numpy otherwise.

Randomness never enters a kernel; callers draw with numpy generators and the
kernels are pure functions of arrays, so switching backend cannot change
which samples are drawn.
"""

from __future__ import annotations

import os

from . import numpy_impl

_ENV_VAR = "PWDLAB_BACKEND"
_requested = os.environ.get(_ENV_VAR, "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"{_ENV_VAR} must be 'numba' or 'numpy', got {_requested!r}")

_impl = None
_backend_name = "numpy"

if _requested in ("", "numba"):
    try:
        from . import numba_impl as _numba_impl

        _impl = _numba_impl
        _backend_name = "numba"
    except ImportError:
        if _requested == "numba":
            raise
if _impl is None:
    _impl = numpy_impl
    _backend_name = "numpy"

conjunction_disagreements = _impl.conjunction_disagreements
conjunction_eval = _impl.conjunction_eval
bernoulli_log_density = _impl.bernoulli_log_density
bary_log_density = _impl.bary_log_density
gaussian_log_density = _impl.gaussian_log_density

KIND_CONST0 = numpy_impl.KIND_CONST0
KIND_CONST1 = numpy_impl.KIND_CONST1
KIND_CONJ = numpy_impl.KIND_CONJ


def backend_name() -> str:
    """Name of the active backend, 'numba' or 'numpy'."""
    return _backend_name
