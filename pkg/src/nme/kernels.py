"""Backend selection for the grid kernels.

The compiled extension is preferred; set ``NME_PURE_PYTHON=1`` to force the
numpy fallback (used by the benchmark and the backend-agreement tests).
"""
import os
from functools import lru_cache

import numpy as np

from nme import _kernels_py

if os.environ.get("NME_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from nme import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

synthesize = _impl.synthesize
analyze = _impl.analyze
level_norms = _impl.level_norms
level_norms_batch = _impl.level_norms_batch
# compiled-only: the fallback is the generic Python loop in nme.continuation
continuation_engine = getattr(_impl, "multiplier_quadratic_continuation", None)


@lru_cache(maxsize=32)
def tables(K, M):
    """Return read-only ``(cos_tab, sin_tab)`` of shape ``(K+1, M)``."""
    theta = 2.0 * np.pi * np.arange(M) / M
    kt = np.outer(np.arange(K + 1), theta)
    cos_tab = np.ascontiguousarray(np.cos(kt))
    sin_tab = np.ascontiguousarray(np.sin(kt))
    sin_tab[0] = 0.0
    cos_tab.flags.writeable = False
    sin_tab.flags.writeable = False
    return cos_tab, sin_tab


@lru_cache(maxsize=32)
def basis_matrices(K, M):
    """Synthesis ``(M, 2K+1)`` and analysis ``(2K+1, M)`` matrices.

    ``analysis @ synthesis`` is the identity for ``M > 2K``.
    """
    cos_tab, sin_tab = tables(K, M)
    synth = np.ascontiguousarray(np.vstack([cos_tab, sin_tab[1:]]).T)
    anal = np.vstack([cos_tab, sin_tab[1:]]) * (2.0 / M)
    anal[0] *= 0.5
    synth.flags.writeable = False
    anal.flags.writeable = False
    return synth, anal
