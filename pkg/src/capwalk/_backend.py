"""Selection between the numba-compiled kernels and the pure-numpy fallback.

The choice is read from the ``CAPWALK_BACKEND`` environment variable
(``numba`` or ``numpy``) and can be overridden for a block of code with
``use_backend``. When numba is not importable the numpy path is used.
"""

import contextlib
import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

_VALID = ("numba", "numpy")
_override = None


def _from_env():
    name = os.environ.get("CAPWALK_BACKEND", "numba").strip().lower()
    if name not in _VALID:
        raise ValueError(f"CAPWALK_BACKEND must be one of {_VALID}, got {name!r}")
    return name


def active_backend():
    """Name of the backend hot loops should use right now."""
    name = _override if _override is not None else _from_env()
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


@contextlib.contextmanager
def use_backend(name):
    """Temporarily force ``name`` as the active backend."""
    global _override
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    previous = _override
    _override = name
    try:
        yield
    finally:
        _override = previous


if HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def kernel_jit(fn):
    """Compile a hot loop: GIL released, numpy semantics for float division."""
    return njit(nogil=True, error_model="numpy")(fn)
