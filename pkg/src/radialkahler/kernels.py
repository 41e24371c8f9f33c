"""Hot-loop kernels, compiled when available.

The compiled ``_ckernels`` extension is used if it imports; otherwise, or
when ``RADIALKAHLER_PURE=1`` is set, the pure-Python ``_pykernels`` module
is used.  Both expose the same functions.
"""
import os

from . import _pykernels

if os.environ.get("RADIALKAHLER_PURE", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"

END = _pykernels.END
EVENT = _pykernels.EVENT
RANGE = _pykernels.RANGE
STEP_FAILURE = _pykernels.STEP_FAILURE
MAX_STEPS = _pykernels.MAX_STEPS

eval_terms = _impl.eval_terms
dopri_terms = _impl.dopri_terms
dopri_kcsck = _impl.dopri_kcsck
kcsck_sigma = _impl.kcsck_sigma

# arbitrary Python right-hand sides always take the interpreted path
dopri5 = _pykernels.dopri5


def backends():
    """Available implementations keyed by name."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["compiled"] = _ckernels
    return out
