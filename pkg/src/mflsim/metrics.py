"""Error functionals between binned densities and convergence-order fits.

The two density discrepancies are computed on bin masses (not density
values), so absolute numbers are comparable across runs only under identical
(a, b, nbins) binning:

    relative entropy:  sum_i true_i * ln(true_i / proxy_i)  over true_i > 0
    L2 error:          sqrt( sum_i |true_i - proxy_i|^2 )

Empty proxy bins would make the entropy infinite; when the proxy comes from
counting N particles its bins are floored at 1/(10 N) and renormalized,
which is below one-particle resolution and therefore cannot mask real mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stationary import HistogramDensity

__all__ = [
    "ErrorReport",
    "relative_entropy",
    "l2_error",
    "weak_functional",
    "strong_error",
    "regression_slope",
    "F_KINDS",
]

F_KINDS = ("positive_part", "identity", "square")


@dataclass(frozen=True)
class ErrorReport:
    """One experiment row, ready for CSV emission."""

    scheme: str
    n: int
    h: float
    t: float
    seed: int
    a: float | None = None
    b: float | None = None
    nbins: int | None = None
    entropy_error: float | None = None
    l2_error: float | None = None
    weak_value: float | None = None
    strong_error: float | None = None
    notes: str = ""


def _check_binning(true_h: HistogramDensity, proxy_h: HistogramDensity) -> None:
    if not true_h.same_binning(proxy_h):
        raise ValueError(
            f"bin layouts differ: [{true_h.a}, {true_h.b}] x {true_h.nbins} vs "
            f"[{proxy_h.a}, {proxy_h.b}] x {proxy_h.nbins}")


def relative_entropy(true_h: HistogramDensity, proxy_h: HistogramDensity,
                     floor: float | None = None) -> float:
    """Relative entropy of the proxy masses against the true masses.

    ``floor`` defaults to 1/(10 n_samples) when the proxy records its sample
    count, else 0 (an empty proxy bin under true mass then yields inf).
    """
    _check_binning(true_h, proxy_h)
    if floor is None:
        floor = 0.0 if proxy_h.n_samples is None else 1.0 / (10.0 * proxy_h.n_samples)
    p = true_h.masses
    q = np.maximum(proxy_h.masses, floor)
    q = q / q.sum()
    active = p > 0
    if np.any(q[active] == 0):
        return float("inf")
    return float(np.sum(p[active] * np.log(p[active] / q[active])))


def l2_error(true_h: HistogramDensity, proxy_h: HistogramDensity) -> float:
    """Euclidean norm of the bin-mass difference vector."""
    _check_binning(true_h, proxy_h)
    return float(np.sqrt(np.sum((true_h.masses - proxy_h.masses) ** 2)))


def weak_functional(positions: np.ndarray, f_kind: str = "positive_part") -> float:
    """Empirical average (1/N) sum f(x_i) of a named test function."""
    x = np.asarray(positions, dtype=float)
    if f_kind == "positive_part":
        return float(np.mean(np.maximum(x, 0.0)))
    if f_kind == "identity":
        return float(np.mean(x))
    if f_kind == "square":
        return float(np.mean(x * x))
    raise ValueError(f"unknown f_kind {f_kind!r}, expected one of {F_KINDS}")


def strong_error(traj_coarse: np.ndarray, traj_reference: np.ndarray,
                 at_steps: np.ndarray | list[int] | None = None) -> float:
    """Max over recorded steps of the RMS particle-wise gap.

    Both trajectories must be (n_records, n_particles) snapshots of runs
    driven by the same Brownian path (coarse increments aggregated from the
    fine ones); rows must correspond to the same physical times.
    """
    a = np.atleast_2d(np.asarray(traj_coarse, dtype=float))
    b = np.atleast_2d(np.asarray(traj_reference, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"trajectory shapes differ: {a.shape} vs {b.shape}")
    if at_steps is not None:
        a = a[np.asarray(at_steps, dtype=int)]
        b = b[np.asarray(at_steps, dtype=int)]
    rms = np.sqrt(np.mean((a - b) ** 2, axis=1))
    return float(np.max(rms))


def regression_slope(points: list[tuple[float, float]]) -> tuple[float, float, float]:
    """Ordinary least squares on (log10 x, log10 y); returns (slope, intercept, r2)."""
    if len(points) < 2:
        raise ValueError("need at least two points for a regression")
    arr = np.asarray(points, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("regression requires strictly positive coordinates")
    lx = np.log10(arr[:, 0])
    ly = np.log10(arr[:, 1])
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2
