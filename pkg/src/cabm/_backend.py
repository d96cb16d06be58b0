"""Pick the compiled core when importable, else the numpy fallback.

Set ``CABM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("CABM_PURE_PYTHON", "") not in ("", "0"):
    impl = _fallback
else:
    try:
        from . import _core as impl
    except ImportError:
        impl = _fallback

BACKEND = "python" if impl is _fallback else "compiled"


def get(name=None):
    """Return a backend module by name (``"compiled"`` or ``"python"``)."""
    if name is None:
        return impl
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
