"""Backend switch between numba-compiled loops and the pure-numpy path.

Set ``KSUMS_DISABLE_NUMBA=1`` before import to skip numba entirely; the
numpy path is then used everywhere. ``force_backend`` flips it at runtime
(tests and the benchmark use it to compare both paths in one process).
"""
import os
from contextlib import contextmanager

_DISABLED = os.environ.get("KSUMS_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

HAVE_NUMBA = False
if not _DISABLED:
    try:
        import numba

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        HAVE_NUMBA = False

_state = {"numba": HAVE_NUMBA}


def _identity(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f

    return wrap


if HAVE_NUMBA:
    njit = numba.njit
else:
    njit = _identity


def use_numba():
    return _state["numba"]


def backend_name():
    return "numba" if _state["numba"] else "numpy"


@contextmanager
def force_backend(name):
    """Temporarily select ``"numba"`` or ``"numpy"``."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    prev = _state["numba"]
    _state["numba"] = name == "numba"
    try:
        yield
    finally:
        _state["numba"] = prev
