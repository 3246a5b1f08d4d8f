"""Competitive-marker regularization of multi-phase vortex patches for the
2D incompressible Euler equation on the torus."""

__version__ = "0.1.0"

from .gating import MarkerSet, PhaseConfig  # noqa: F401
from .spectral import Grid  # noqa: F401
from .transport import SimState, StepControl  # noqa: F401
