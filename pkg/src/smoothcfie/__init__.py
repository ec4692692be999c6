"""smoothcfie: smoothed combined field integral equations for 2D exterior Helmholtz scattering."""

from __future__ import annotations

__version__ = "0.1.0"


class SmoothCfieError(Exception):
    """Base class for all errors raised by smoothcfie."""
