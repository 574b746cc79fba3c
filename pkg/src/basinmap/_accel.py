"""Optional numba acceleration.

Set ``BASINMAP_NO_NUMBA=1`` to run every kernel as plain Python and every
raster through the vectorized numpy path, even when numba is installed.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    numba = None
    HAVE_NUMBA = False

NUMBA_DISABLED = os.environ.get("BASINMAP_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
NUMBA_ENABLED = HAVE_NUMBA and not NUMBA_DISABLED

BACKENDS = ("numba", "numpy")


def jit(fn):
    """njit with the options every kernel shares, or identity when disabled."""
    if not NUMBA_ENABLED:
        return fn
    # error_model="numpy": float division by zero yields inf/nan like the numpy path
    return numba.njit(cache=True, nogil=True, error_model="numpy")(fn)


def default_backend():
    return "numba" if NUMBA_ENABLED else "numpy"


def resolve_backend(backend=None):
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "numba" and not NUMBA_ENABLED:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    return backend
