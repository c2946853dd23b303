"""Kernel backend selection.

The compiled Cython kernels are preferred when the extension built; the
pure-numpy fallback is mathematically identical (last-ulp arithmetic may
differ, so reproducibility contracts are per backend). Set ICFADING_FORCE_PY=1
to force the fallback.
"""

import os

from . import _pykern

if os.environ.get("ICFADING_FORCE_PY"):
    _impl = _pykern
    BACKEND = "python"
else:
    try:
        from . import _fastkern as _impl   # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykern
        BACKEND = "python"

scalar_info_density = _impl.scalar_info_density
log_q_diff = _impl.log_q_diff


def get_backends():
    """All importable backends, name -> module (for tests and benchmarks)."""
    backends = {"python": _pykern}
    try:
        from . import _fastkern

        backends["cython"] = _fastkern
    except ImportError:
        pass
    return backends
