"""Exact single-particle Gaussian laws for the quadratic potential pair.

With U(x) = c x^2/2 and V(x) = alpha x^2/2 the N-particle system is linear,
so the single-particle marginal stays Gaussian at all times, both for the
continuous dynamics and for each discrete chain.  Decomposing a particle as
(empirical mean) + (deviation from it) gives two independent scalar Gaussian
components:

* the mean component relaxes at rate c and feels noise of variance h/N per
  step (the averaged Brownian increments),
* the deviation component relaxes at rate c + alpha with per-step noise
  variance h (1 - 1/N).

Propagating (mean, variance, increment covariance) through each scheme's
update yields the chain law exactly; these closed forms are the noise-free
reference for the weak-order study and the stationary-variance oracles.
Notably the non-Markovian chain's stationary variance equals the exact
sigma^2-based value for every admissible h, while the Euler chain inflates
it by 1/(1 - h (c + alpha)/2) on the deviation component.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, pi, sqrt

from scipy.special import ndtr

from .model import ModelSpec, Quadratic, QuadraticInteraction, ZeroInteraction

__all__ = [
    "LinearModelLaw",
    "linear_params",
    "ips_marginal",
    "chain_marginal",
    "stationary_chain_variance",
    "positive_part_mean",
    "gaussian_functional_mean",
]


@dataclass(frozen=True)
class LinearModelLaw:
    mean: float
    variance: float


def linear_params(model: ModelSpec) -> tuple[float, float, float]:
    """Extract (curvature, alpha, sigma); raises for non-quadratic kinds."""
    if not isinstance(model.u_kind, Quadratic):
        raise ValueError("exact laws require the quadratic confining potential")
    if isinstance(model.v_kind, ZeroInteraction):
        alpha = 0.0
    elif isinstance(model.v_kind, QuadraticInteraction):
        alpha = model.v_kind.alpha
    else:
        raise ValueError("exact laws require the quadratic or zero interaction")
    return model.u_kind.curvature, alpha, model.sigma


def ips_marginal(model: ModelSpec, n: int, t: float,
                 init_mean: float, init_var: float) -> LinearModelLaw:
    """Exact marginal law of one particle of the continuous N-particle system."""
    c, alpha, sigma = linear_params(model)
    r = c + alpha
    mean = init_mean * exp(-c * t)
    var_bar = (init_var / n) * exp(-2.0 * c * t) \
        + sigma**2 / (2.0 * c * n) * (1.0 - exp(-2.0 * c * t))
    var_dev = init_var * (1.0 - 1.0 / n) * exp(-2.0 * r * t) \
        + sigma**2 * (1.0 - 1.0 / n) / (2.0 * r) * (1.0 - exp(-2.0 * r * t))
    return LinearModelLaw(mean=mean, variance=var_bar + var_dev)


def _component_recursion(scheme: str, rate: float, sigma: float, h: float,
                         steps: int, q: float, var0: float) -> float:
    """Variance of one scalar component after ``steps`` scheme updates.

    ``q`` is the per-step variance of this component's Brownian increment.
    The non-Markovian update couples the state to the previous increment
    with covariance (sigma/2) q once a first increment exists.  The
    postprocessed chain's public state trails the non-Markovian one by
    (sigma/2) times the newest increment, which removes (sigma^2/4) q from
    the variance once any step has been taken.
    """
    a = 1.0 - rate * h
    v = var0
    if scheme == "euler":
        for _ in range(steps):
            v = a * a * v + sigma**2 * q
        return v
    if scheme in ("nm", "postprocessed"):
        cov = 0.0
        have_prev = False
        for _ in range(steps):
            v = a * a * v + (sigma**2 / 4.0) * q \
                + ((sigma**2 / 4.0) * q + a * sigma * cov if have_prev else 0.0)
            cov = (sigma / 2.0) * q
            have_prev = True
        if scheme == "postprocessed" and steps > 0:
            v -= (sigma**2 / 4.0) * q
        return v
    raise ValueError(f"unknown scheme {scheme!r}")


def chain_marginal(scheme: str, model: ModelSpec, n: int, h: float, steps: int,
                   init_mean: float, init_var: float) -> LinearModelLaw:
    """Exact marginal law of one particle of the discrete chain after ``steps``."""
    c, alpha, sigma = linear_params(model)
    mean = init_mean * (1.0 - c * h) ** steps
    q_bar = h / n
    q_dev = h * (1.0 - 1.0 / n)
    var_bar = _component_recursion(scheme, c, sigma, h, steps, q_bar, init_var / n)
    var_dev = _component_recursion(scheme, c + alpha, sigma, h, steps, q_dev,
                                   init_var * (1.0 - 1.0 / n))
    return LinearModelLaw(mean=mean, variance=var_bar + var_dev)


def stationary_chain_variance(scheme: str, model: ModelSpec, h: float) -> float:
    """Large-N, large-time variance of the chain (deviation component).

    Euler: sigma^2/(2 r) * 1/(1 - h r / 2) with r = curvature + alpha;
    non-Markovian: sigma^2/(2 r) independent of h; postprocessed (raw hat
    state, before the half-increment correction): sigma^2/(2 r) - sigma^2 h/4.
    """
    c, alpha, sigma = linear_params(model)
    r = c + alpha
    base = sigma**2 / (2.0 * r)
    if scheme == "euler":
        return base / (1.0 - h * r / 2.0)
    if scheme == "nm":
        return base
    if scheme == "postprocessed":
        return base - sigma**2 * h / 4.0
    raise ValueError(f"unknown scheme {scheme!r}")


def positive_part_mean(mean: float, variance: float) -> float:
    """E[X 1_{X >= 0}] for X ~ N(mean, variance)."""
    s = sqrt(variance)
    z = mean / s
    pdf = exp(-0.5 * z * z) / sqrt(2.0 * pi)
    return mean * float(ndtr(z)) + s * pdf


def gaussian_functional_mean(f_kind: str, mean: float, variance: float) -> float:
    """E[f(X)] for X ~ N(mean, variance) and a named test function."""
    if f_kind == "positive_part":
        return positive_part_mean(mean, variance)
    if f_kind == "identity":
        return mean
    if f_kind == "square":
        return mean * mean + variance
    raise ValueError(f"no closed form for f_kind={f_kind!r}")
