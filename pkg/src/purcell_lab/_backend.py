"""Numba/numpy backend selection.

The hot kernels in :mod:`purcell_lab._kernels` ship in two variants: numba
``@njit`` loops and vectorized pure-numpy code. The numba variant is used by
default when numba imports cleanly; setting the environment variable
``PURCELL_LAB_DISABLE_NUMBA=1`` (before import) forces the numpy path.
"""

import os


def _env_disabled() -> bool:
    value = os.environ.get("PURCELL_LAB_DISABLE_NUMBA", "").strip().lower()
    return value in ("1", "true", "yes", "on")


NUMBA_AVAILABLE = False
if not _env_disabled():
    try:
        import numba  # noqa: F401

        NUMBA_AVAILABLE = True
    except ImportError:
        NUMBA_AVAILABLE = False

NUMBA_ENABLED = NUMBA_AVAILABLE and not _env_disabled()


def backend_name() -> str:
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if NUMBA_ENABLED else "numpy"
