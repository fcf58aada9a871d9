"""Kernel backend selection.

The compiled extension (``odebnb._core``) is preferred; the pure-Python
module (``odebnb._pure``) is a drop-in replacement selected automatically
when the extension is missing.  Both produce bit-identical enclosures.

Set ``ODEBNB_BACKEND=python`` (or ``c``) to force a backend; forcing ``c``
raises if the extension was not built.
"""

import os

from . import _pure

_requested = os.environ.get("ODEBNB_BACKEND", "").strip().lower()

if _requested in ("py", "python", "pure"):
    _impl = _pure
elif _requested in ("c", "compiled", "core"):
    from . import _core as _impl  # noqa: F401  (ImportError is the diagnostic)
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND_NAME

OK = _impl.OK
NO_ENCLOSURE = _impl.NO_ENCLOSURE
ABS_KINK = _impl.ABS_KINK
EMPTY_RESULT = _impl.EMPTY_RESULT
STEP_LIMIT = _impl.STEP_LIMIT

eval_tape = _impl.eval_tape
ode_coeffs = _impl.ode_coeffs
picard = _impl.picard
taylor_step = _impl.taylor_step
integrate_loop = _impl.integrate_loop
