"""Select the compiled kernels when available, else the pure-Python ones.

Set ``KPZMP_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

kernels = _fallback
NAME = "python"

if os.environ.get("KPZMP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        NAME = "cython"


def get(name=None):
    """Return a kernel module by name ('cython' or 'python'), default the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
