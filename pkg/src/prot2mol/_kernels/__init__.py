"""Hot inner loops with a compiled backend and a pure-Python fallback.

The compiled extension is used when it was built and importable; setting
``PROT2MOL_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names the one
in use.
"""

import os

from . import _pure

_compiled = None
if os.environ.get("PROT2MOL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ext as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    BACKEND = "cython"
    gotoh = _compiled.gotoh
    tanimoto_matrix = _compiled.tanimoto_matrix
else:
    BACKEND = "python"
    gotoh = _pure.gotoh
    tanimoto_matrix = _pure.tanimoto_matrix

__all__ = ["BACKEND", "gotoh", "tanimoto_matrix"]
