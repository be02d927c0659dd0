"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``BETHE_PERM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("BETHE_PERM_PURE_PYTHON"):
    kernels = _pykernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        kernels = _pykernels

BACKEND = "compiled" if kernels is not _pykernels else "python"
