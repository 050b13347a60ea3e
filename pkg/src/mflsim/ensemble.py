"""Particle state and the interacting drift of the N-particle system.

The drift of particle i is

    B_i(x) = -grad U(x_i) - (1/N) sum_j grad V(x_i - x_j),

evaluated pairwise in O(N^2) for general interactions.  For the built-in
quadratic interaction (grad V(x) = alpha x) the pair sum collapses to the
empirical mean, giving the O(N) fast path that makes multi-million-particle
runs feasible; its correctness is pinned to the pairwise loop by tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelSpec, QuadraticInteraction, ZeroInteraction, grad_u, grad_v
from .stationary import HistogramDensity

__all__ = [
    "ParticleEnsemble",
    "drift",
    "drift_pairwise",
    "empirical_mean",
    "empirical_moment",
    "histogram",
]

_PAIR_BLOCK = 512  # row block for the pairwise drift, bounds memory at N * block


@dataclass
class ParticleEnsemble:
    """Positions plus the previous-step Brownian increments.

    ``prev_increments`` holds the increments of the last completed step; it
    is all zeros before the first step, which is exactly the convention the
    non-Markovian scheme needs for its first update.  Owned exclusively by
    the driver while stepping.
    """

    positions: np.ndarray
    prev_increments: np.ndarray = field(default=None)  # type: ignore[assignment]
    step_index: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.prev_increments is None:
            self.prev_increments = np.zeros_like(self.positions)
        else:
            self.prev_increments = np.asarray(self.prev_increments, dtype=float)
        if self.prev_increments.shape != self.positions.shape:
            raise ValueError("positions and prev_increments must have equal length")

    @property
    def n(self) -> int:
        return self.positions.size

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.positions.copy(),
                                self.prev_increments.copy(),
                                self.step_index)


def drift_pairwise(model: ModelSpec, positions: np.ndarray) -> np.ndarray:
    """O(N^2) evaluation of the interacting drift, any interaction kind."""
    x = np.asarray(positions, dtype=float)
    n = x.size
    out = -grad_u(model, x)
    for lo in range(0, n, _PAIR_BLOCK):
        hi = min(lo + _PAIR_BLOCK, n)
        diffs = x[lo:hi, None] - x[None, :]
        out[lo:hi] -= grad_v(model, diffs).sum(axis=1) / n
    return out


def drift(model: ModelSpec, positions: np.ndarray) -> np.ndarray:
    """Interacting drift B(x); O(N) for the built-in quadratic interaction."""
    x = np.asarray(positions, dtype=float)
    if isinstance(model.v_kind, ZeroInteraction):
        return -grad_u(model, x)
    if isinstance(model.v_kind, QuadraticInteraction):
        return -grad_u(model, x) - model.v_kind.alpha * (x - x.mean())
    return drift_pairwise(model, x)


def empirical_mean(positions: np.ndarray) -> float:
    return float(np.mean(positions))


def empirical_moment(positions: np.ndarray, p: int) -> float:
    """Raw empirical moment (1/N) sum x_i^p."""
    return float(np.mean(np.asarray(positions, dtype=float) ** p))


def histogram(positions: np.ndarray, a: float, b: float, nbins: int,
              ) -> HistogramDensity:
    """Bin particles into equally spaced half-open bins with tail lumping.

    Bin k covers [e_k, e_{k+1}); ties at interior edges go right.  Positions
    below a land in the first bin, positions at or above b in the last, so
    the masses sum to exactly 1.
    """
    if nbins < 2:
        raise ValueError(f"need at least 2 bins, got {nbins}")
    if a >= b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    x = np.asarray(positions, dtype=float)
    interior = np.linspace(a, b, nbins + 1)[1:-1]
    idx = np.searchsorted(interior, x, side="right")
    counts = np.bincount(idx, minlength=nbins)
    return HistogramDensity(a=a, b=b, nbins=nbins,
                            masses=counts / x.size, n_samples=x.size)
