"""Backend selection for the slot kernel.

``MMWAVE_SDN_BACKEND=numpy`` forces the pure-numpy path; ``numba`` (the
default) uses the compiled kernel and silently falls back to numpy when
numba cannot be imported. The flag only picks the compute path, it never
changes results.
"""

import os

BACKEND_ENV = "MMWAVE_SDN_BACKEND"
BACKENDS = ("numba", "numpy")


def _load(name):
    if name == "numba":
        from . import _kernel_numba as mod
    elif name == "numpy":
        from . import _kernel_numpy as mod
    else:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    return mod


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def backend_name(name=None) -> str:
    name = (name or os.environ.get(BACKEND_ENV) or "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numba" and not numba_available():
        return "numpy"
    return name


def get_kernel(name=None):
    """The ``advance_block`` function of the selected backend."""
    return _load(backend_name(name)).advance_block
