"""Backend switch for the compiled kernels.

Set ``SPIKERING_NUMBA=0`` in the environment to force the pure-numpy path.
The choice can also be changed at runtime with :func:`set_backend`.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FALSY = {"0", "false", "no", "off"}

HAVE_NUMBA = numba is not None
_backend = "numba" if HAVE_NUMBA and os.environ.get("SPIKERING_NUMBA", "1").lower() not in _FALSY else "numpy"


def backend():
    return _backend


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    previous, _backend = _backend, name
    return previous


def njit(func):
    if numba is None:
        return func
    return numba.njit(cache=True, fastmath=False)(func)
