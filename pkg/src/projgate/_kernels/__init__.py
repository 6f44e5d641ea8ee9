"""Hot-loop kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it was built and ``PROJGATE_PURE_PYTHON``
is unset; otherwise the numpy versions are used. Both backends give
bit-identical results.
"""

import os

from . import _fallback

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _fallback}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and not os.environ.get("PROJGATE_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]

scan_projection = _impl.scan_projection
studentized_max_gaps = _impl.studentized_max_gaps
alpha_radii = _impl.alpha_radii


def get_backend(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
