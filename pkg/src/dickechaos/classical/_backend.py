"""Kernel selection: the compiled DOP853 flow when built, else the scipy one.

Set ``DICKECHAOS_BACKEND=python`` to force the fallback.
"""

import os

from ..errors import InvalidParameter
from . import _flow_py

try:
    from . import _flow as _compiled
except ImportError:  # extension not built
    _compiled = None

KERNELS = {"python": _flow_py}
if _compiled is not None:
    KERNELS["compiled"] = _compiled

_forced = os.environ.get("DICKECHAOS_BACKEND", "").strip().lower()
if _forced and _forced not in ("python", "compiled"):
    raise ImportError(f"DICKECHAOS_BACKEND must be 'python' or 'compiled', got {_forced!r}")
if _forced == "compiled" and _compiled is None:
    raise ImportError("DICKECHAOS_BACKEND=compiled but the extension is not built")
if _forced == "python" or _compiled is None:
    DEFAULT = "python"
else:
    DEFAULT = "compiled"


def get_kernel(name=None):
    name = DEFAULT if name is None else name
    if name not in KERNELS:
        raise InvalidParameter(f"backend {name!r} unavailable; have {sorted(KERNELS)}")
    return KERNELS[name]
