"""Backend selection for the hot kernels.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels`` is used. ``TURF_PURE_PYTHON=1`` forces
the fallback.
"""
import os

from turf import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("TURF_PURE_PYTHON"):
    try:
        from turf import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

ROOT_TOL = _pykernels.ROOT_TOL

poly_roots = _impl.poly_roots
abs_integral = _impl.abs_integral
abs_integrals = _impl.abs_integrals
roots_batch = _impl.roots_batch
max_k_profit = _impl.max_k_profit
segmented_ak = _impl.segmented_ak
ak_rows = _impl.ak_rows


def backends():
    """Mapping of every importable backend name to its module."""
    out = {"python": _pykernels}
    try:
        from turf import _kernels

        out["cython"] = _kernels
    except ImportError:  # pragma: no cover
        pass
    return out
