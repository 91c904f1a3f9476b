"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when
``DUALRATE_NCS_PURE=1`` is set, the pure-Python twin is used. Both backends
produce bit-identical traces.
"""
import os

from . import _core_py

BACKEND = "python"
run_ticks = _core_py.run_ticks
cascade = _core_py.cascade

if os.environ.get("DUALRATE_NCS_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:  # extension not built
        pass
    else:
        run_ticks = _core.run_ticks
        cascade = _core.cascade
        BACKEND = "compiled"


def backends():
    """Mapping of available backend name -> module, for tests and benchmarks."""
    found = {"python": _core_py}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        found["compiled"] = _core
    return found
