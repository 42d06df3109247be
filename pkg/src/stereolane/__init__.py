"""Stereo-vision multiple-lane detection with temporally seeded disparity search."""

__version__ = "0.1.0"

from .backend import active_backend

__all__ = ["active_backend", "__version__"]
