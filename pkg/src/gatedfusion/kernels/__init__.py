"""LSTM scan kernels with import-time implementation selection.

The compiled Cython core is preferred when its extension module built;
otherwise (or when ``GATEDFUSION_PURE`` is set in the environment) the
pure-NumPy fallback is used. Both expose ``lstm_scan_forward`` and
``lstm_scan_backward`` with identical semantics; see ``pure`` for the
contract and ``benchmarks/bench_kernels.py`` for a speed comparison.
"""

import contextlib
import os

from . import pure

IMPLEMENTATIONS = {"pure": pure}
try:
    from . import _core

    IMPLEMENTATIONS["compiled"] = _core
except ImportError:
    _core = None

if os.environ.get("GATEDFUSION_PURE"):
    ACTIVE = "pure"
else:
    ACTIVE = "compiled" if _core is not None else "pure"

lstm_scan_forward = IMPLEMENTATIONS[ACTIVE].lstm_scan_forward
lstm_scan_backward = IMPLEMENTATIONS[ACTIVE].lstm_scan_backward


@contextlib.contextmanager
def override(name):
    """Temporarily route the scan kernels through implementation ``name``."""
    global lstm_scan_forward, lstm_scan_backward, ACTIVE
    impl = IMPLEMENTATIONS[name]
    saved = (lstm_scan_forward, lstm_scan_backward, ACTIVE)
    lstm_scan_forward = impl.lstm_scan_forward
    lstm_scan_backward = impl.lstm_scan_backward
    ACTIVE = name
    try:
        yield
    finally:
        lstm_scan_forward, lstm_scan_backward, ACTIVE = saved
