"""Kernel backend selection.

The compiled extension is used when it was built; setting the environment
variable ``SSLAB_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _pykernels

python = _pykernels

try:
    if os.environ.get("SSLAB_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

local_inputs = _impl.local_inputs
sync_successors = _impl.sync_successors
settle_times = _impl.settle_times
