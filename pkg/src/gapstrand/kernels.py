"""Select the membrane kernel backend at import time.

The compiled extension is used when it was built; otherwise the NumPy
fallback is used. Set ``GAPSTRAND_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _brkernel_py

BACKEND = "python"
_impl = _brkernel_py

if os.environ.get("GAPSTRAND_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _brkernel as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _brkernel_py

ionic_current = _impl.ionic_current
step_gates = _impl.step_gates
steady_state = _brkernel_py.steady_state

__all__ = ["BACKEND", "ionic_current", "step_gates", "steady_state"]
