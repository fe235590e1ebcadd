"""Backend selection for the RK4 hot loop.

The compiled extension ``qstc._kernels`` is used when it imports; otherwise
the pure-Python module is used. Setting ``QSTC_PURE_PYTHON=1`` forces the
fallback.
"""
import os

from . import _kernels_py

if os.environ.get("QSTC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

PHI_ZERO = _kernels_py.PHI_ZERO
PHI_LINEAR = _kernels_py.PHI_LINEAR
PHI_SQRT_SHIFT = _kernels_py.PHI_SQRT_SHIFT

lure_rk4 = _impl.lure_rk4
phi_value = _impl.phi_value


def backends():
    """Map of available backend name to module, for tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
