"""Kernel backend selection.

The compiled Cython extension is used when it imported cleanly; otherwise
the numpy fallback takes over. ``STEREOLANE_BACKEND=python`` forces the
fallback (used by the parity tests and the backend benchmark).
"""

import os

from . import _fallback

_forced = os.environ.get("STEREOLANE_BACKEND", "").strip().lower()

if _forced in ("python", "numpy", "fallback"):
    _impl = _fallback
    BACKEND = "python"
elif _forced in ("", "auto", "compiled", "c"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _forced in ("compiled", "c"):
            raise
        _impl = _fallback
        BACKEND = "python"
else:
    raise ValueError(f"unknown STEREOLANE_BACKEND value: {_forced!r}")

match_kernel = _impl.match_kernel
bilateral_kernel = _impl.bilateral_kernel


def active_backend() -> str:
    """Name of the kernel implementation in use: 'compiled' or 'python'."""
    return BACKEND
