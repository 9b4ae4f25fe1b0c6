"""Kernel backend dispatch.

The environment variable KSBLOW_KERNELS selects the backend:
"numba" (default when importable) or "numpy".  Both expose the same
functions; benchmarks/bench_kernels.py compares them head to head.
"""
from __future__ import annotations

import logging
import os

log = logging.getLogger(__name__)

_requested = os.environ.get("KSBLOW_KERNELS", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"KSBLOW_KERNELS must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    from . import _numpy as _backend

    BACKEND = "numpy"
else:
    try:
        from . import _numba as _backend

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        from . import _numpy as _backend

        BACKEND = "numpy"
        log.warning("numba unavailable, falling back to numpy kernels")

thomas = _backend.thomas
advect_upwind = _backend.advect_upwind
diffusion_solve = _backend.diffusion_solve
helmholtz_solve = _backend.helmholtz_solve
apply_helmholtz = _backend.apply_helmholtz
cn_step = _backend.cn_step
ie_step = _backend.ie_step


def backend_name() -> str:
    return BACKEND
