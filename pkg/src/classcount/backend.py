"""Kernel backend selection.

The Monte Carlo hot kernels exist twice: a compiled Cython extension
(``_kernels_cy``) and a pure NumPy fallback (``_kernels_py``).  The
compiled one is preferred when importable; set the environment variable
``CLASSCOUNT_PURE_PYTHON=1`` to force the fallback.  Both produce
bit-identical results, so the choice only affects speed.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("CLASSCOUNT_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

ks_statistics = _impl.ks_statistics
zt_mixture_counts = _impl.zt_mixture_counts
em_refit = _impl.em_refit


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "python")."""
    return _impl.BACKEND_NAME
