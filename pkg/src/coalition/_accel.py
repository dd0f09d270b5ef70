"""Backend selection for the numeric kernels.

The hot loops of the local search have two implementations: a numba
``@njit`` version and a pure-numpy version. ``COALITION_BACKEND`` picks one
(``numba`` or ``numpy``); the default is numba when it imports cleanly.
"""
import os

BACKEND_ENV = "COALITION_BACKEND"

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAS_NUMBA = False


def requested_backend():
    value = os.environ.get(BACKEND_ENV, "").strip().lower()
    if value in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and not HAS_NUMBA:
        raise ImportError(f"{BACKEND_ENV}=numba but numba is not installed")
    return value


def njit(*args, **kwargs):
    """``numba.njit`` when numba is available, identity otherwise."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def thread_count():
    """Worker cap from ``COALITION_THREADS`` (default 1)."""
    raw = os.environ.get("COALITION_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
