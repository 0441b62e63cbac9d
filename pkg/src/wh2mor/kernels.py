"""Kernel selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``WH2_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the NumPy fallback is used. ``BACKEND`` names the active one.
"""

import os

from . import _kernels_py

_force_pure = os.environ.get("WH2_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

pr_eval = _impl.pr_eval
pr_deriv = _impl.pr_deriv
hess_eval = _impl.hess_eval
rk4 = _impl.rk4

__all__ = ["BACKEND", "pr_eval", "pr_deriv", "hess_eval", "rk4"]
