"""Softmax phase gating: competitive weights, vorticity assembly, gap fields.

The K marker fields phi_k carry the phase competition; at each point the
weights pi_k = exp(beta*phi_k)/sum_j exp(beta*phi_j) mix the vorticity levels
c_k. As beta grows the mixture collapses onto the argmax phase.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import FieldError, Grid, _require_finite

# weights below this are flushed to zero; ratio identities are not meaningful
# past double-precision underflow anyway
UNDERFLOW_FLUSH = 1e-300


@dataclass(frozen=True)
class PhaseConfig:
    """Vorticity levels and sharpness for a K-phase configuration."""

    levels: tuple[float, ...]
    beta: float

    def __post_init__(self):
        if len(self.levels) < 2:
            raise ValueError("need at least two phases")
        if not all(np.isfinite(self.levels)):
            raise ValueError("levels must be finite")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")

    @property
    def k(self) -> int:
        return len(self.levels)

    @property
    def max_level_spread(self) -> float:
        return float(max(self.levels) - min(self.levels))


@dataclass
class MarkerSet:
    """K scalar marker fields on one grid plus their phase configuration."""

    grid: Grid
    phi: np.ndarray  # shape (K, n, n)
    config: PhaseConfig

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.ndim != 3 or self.phi.shape[0] != self.config.k:
            raise FieldError(
                f"marker array shape {self.phi.shape} does not match K={self.config.k}"
            )
        if self.phi.shape[1:] != (self.grid.n, self.grid.n):
            raise FieldError("marker fields do not match their grid")

    @property
    def k(self) -> int:
        return self.config.k

    def with_phi(self, phi: np.ndarray) -> "MarkerSet":
        return MarkerSet(self.grid, phi, self.config)

    def with_beta(self, beta: float) -> "MarkerSet":
        return MarkerSet(self.grid, self.phi, PhaseConfig(self.config.levels, beta))

    def copy(self) -> "MarkerSet":
        return MarkerSet(self.grid, self.phi.copy(), self.config)


def softmax_weights(scores: np.ndarray, beta: float) -> np.ndarray:
    """Stable softmax over axis 0: exp(beta*s_k - beta*max) / sum.

    Satisfies pi_k/pi_l = exp(beta*(s_k - s_l)) wherever neither weight has
    underflowed; weights below UNDERFLOW_FLUSH are flushed to exact zero.
    """
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise FieldError("softmax scores contain non-finite values")
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be positive and finite, got {beta}")
    z = beta * (scores - scores.max(axis=0, keepdims=True))
    w = np.exp(z)
    w /= w.sum(axis=0, keepdims=True)
    w[w < UNDERFLOW_FLUSH] = 0.0
    return w


def weight_fields(m: MarkerSet) -> np.ndarray:
    """Softmax weights of the marker set, shape (K, n, n)."""
    return softmax_weights(m.phi, m.config.beta)


def assemble_soft_vorticity(m: MarkerSet) -> np.ndarray:
    """Convex mixture omega = sum_k c_k pi_k; bounded by [min c, max c]."""
    w = weight_fields(m)
    return np.tensordot(np.asarray(m.config.levels), w, axes=(0, 0))


def assemble_sharp_vorticity(m: MarkerSet) -> np.ndarray:
    """omega = c_{argmax phi}; ties broken by lowest phase index."""
    _require_finite(m.phi, "markers")
    winner = np.argmax(m.phi, axis=0)
    return np.asarray(m.config.levels)[winner]


def winner_gap(m: MarkerSet) -> np.ndarray:
    """Largest minus second-largest marker value at each point (>= 0)."""
    _require_finite(m.phi, "markers")
    top2 = np.partition(m.phi, m.k - 2, axis=0)[m.k - 2 :]
    return top2[1] - top2[0]


def gap_infimum(m: MarkerSet, dist_to_tie: np.ndarray, delta: float) -> float:
    """delta-gap: min of winner_gap over points at distance >= delta from the
    tie network. Returns +inf (the infimum over an empty set) when the
    exclusion empties the grid."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    keep = dist_to_tie >= delta
    if not keep.any():
        return np.inf
    return float(winner_gap(m)[keep].min())
