"""Backend selection for the string kernels.

The compiled ``_speedups`` extension is used when importable; set
``RVD_PURE_PYTHON=1`` to force the pure-Python implementation.
"""

import os

from . import _pykernels

BACKEND = "python"
levenshtein = _pykernels.levenshtein
edit_similarity = _pykernels.edit_similarity

if not os.environ.get("RVD_PURE_PYTHON"):
    try:
        from . import _speedups
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        levenshtein = _speedups.levenshtein
        edit_similarity = _speedups.edit_similarity

__all__ = ["BACKEND", "edit_similarity", "levenshtein"]
