"""Backend selection for the recurrence kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise
the numpy fallback in ``_pykernels``.  Both are importable directly through
:func:`backend` for comparison and benchmarking.
"""
import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"
_impl = _ckernels if _ckernels is not None else _pykernels


def _c(arr):
    return np.ascontiguousarray(arr, dtype=np.float64)


def step_batch(pts):
    return _impl.step_batch(_c(pts))


def iterate_batch(pts, max_iters, fid_tol):
    return _impl.iterate_batch(_c(pts), int(max_iters), float(fid_tol))


def mixed_step_batch(first, second, uniforms):
    return _impl.mixed_step_batch(_c(first), _c(second), _c(uniforms))


def available_backends():
    return ["cython", "python"] if _ckernels is not None else ["python"]


def backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``.

    The compiled functions need C-contiguous float64 arrays.
    """
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("qpa._ckernels was not built")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
