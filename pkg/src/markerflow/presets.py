"""Shipped initial marker configurations.

Each preset builds an admissible K-phase partition; the nondegeneracy
constants (delta, m) are measured on the grid at load time, never assumed.
"""
from __future__ import annotations

import numpy as np

from . import geometry
from .gating import MarkerSet, PhaseConfig
from .spectral import Grid

DEFAULT_STRIP_DELTA = 0.5


def build_preset(name: str, grid: Grid, beta: float) -> MarkerSet:
    """shear2: K=2 steady shear with tie lines y in {0, pi}.
    cells3: K=3 cellular partition with junctions.
    bands3: K=3 y-only steady three-phase stack."""
    x, y = grid.x, grid.y
    if name == "shear2":
        phi = np.stack([np.sin(y), np.zeros_like(y)])
        levels = (1.0, -1.0)
    elif name == "cells3":
        # Center offsets are chosen so that for every pair (i, j) the saddle
        # values of phi_i - phi_j stay clear of the zero level: differences of
        # equal x- and y-amplitudes would put a critical point on the tie set
        # and destroy the nondegeneracy the error bounds depend on.
        centers = [(0.0, 0.0), (2 * np.pi / 3, np.pi / 3), (np.pi, 5 * np.pi / 3)]
        phi = np.stack([np.cos(x - a) + np.cos(y - b) for a, b in centers])
        levels = (1.0, 0.0, -1.0)
    elif name == "bands3":
        phi = np.stack([np.cos(y - 2 * np.pi * k / 3) + np.zeros_like(x) for k in range(3)])
        levels = (1.0, 0.0, -1.0)
    else:
        raise ValueError(f"unknown preset {name!r}")
    return MarkerSet(grid, phi, PhaseConfig(levels, beta))


def preset_names() -> tuple[str, ...]:
    return ("shear2", "cells3", "bands3")


def measure_nondegeneracy(m: MarkerSet, delta: float = DEFAULT_STRIP_DELTA) -> dict:
    """Measured nondegeneracy constants per pair: min |grad(phi_i - phi_j)|
    on the strip {|phi_i - phi_j| <= delta} within the top-two region."""
    out = {"strip_delta": delta}
    for i in range(m.k):
        for j in range(i + 1, m.k):
            out[f"m_{i + 1}{j + 1}"] = geometry.min_gradient_on_strip(m, i, j, delta)
    finite = [v for k, v in out.items() if k != "strip_delta" and np.isfinite(v)]
    out["m"] = min(finite) if finite else np.inf
    return out
