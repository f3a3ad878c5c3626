"""Backend selection for the hot kernels.

The numba kernels are used when numba imports cleanly and the environment
variable ``WSBM_DISABLE_NUMBA`` is unset (or set to ``0``/``false``).
Otherwise every kernel falls back to its vectorized numpy twin.  Both
backends are always importable so they can be compared directly.
"""

import os

_FALSEY = {"", "0", "false", "no", "off"}

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba ships in the dev environment
    HAVE_NUMBA = False


def numba_disabled_by_env() -> bool:
    return os.environ.get("WSBM_DISABLE_NUMBA", "").strip().lower() not in _FALSEY


def default_backend() -> str:
    """Return ``"numba"`` or ``"numpy"`` according to availability and env."""
    if HAVE_NUMBA and not numba_disabled_by_env():
        return "numba"
    return "numpy"


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}; expected 'numba' or 'numpy'")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        from numba import njit as _njit

        return _njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap
