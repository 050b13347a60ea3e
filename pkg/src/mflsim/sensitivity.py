"""Pathwise variation processes and Monte Carlo gradient estimates.

The first variation J(s) of the particle-system flow solves the linear ODE
dJ/ds = A(X_s) J with J(t) = I, where A is the drift Jacobian

    A_il = [-hess U(x_i) - (1/N) sum_j hess V(x_i - x_j)] delta_il
           + (1/N) hess V(x_i - x_l)   (l != i).

The second variation S(s) is the rank-3 tensor driven by the contraction of
the drift's second derivative with two first-variation factors; it vanishes
identically for purely quadratic potentials.  Both are integrated with the
same explicit Euler step as the driving path, evaluating coefficients at the
left endpoint.

Gradients of the conditional-expectation solution u(t, x) = E[g(X_T) | X_t = x]
are estimated pathwise as d_j u = E[ sum_i g_i(X_T) J_ij(T) ] for averaged
test functions g(x) = (1/N) sum_i f(x_i) with differentiable f.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensemble import drift
from .metrics import regression_slope
from .model import ModelSpec, QuadraticInteraction, ZeroInteraction
from .rng import NoiseSource

__all__ = [
    "FIRST_VARIATION_MAX_N",
    "SECOND_VARIATION_MAX_N",
    "drift_jacobian",
    "first_variation_evolve",
    "second_variation_evolve",
    "linear_first_variation",
    "VariationDecaySummary",
    "variation_decay_summary",
    "GradientEstimate",
    "u_gradient_mc",
    "u_value_mc",
    "u_value_samples",
    "SMOOTH_F",
]

FIRST_VARIATION_MAX_N = 1024
SECOND_VARIATION_MAX_N = 32

# differentiable single-particle test functions f -> (f, f')
SMOOTH_F = {
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
    "square": (lambda x: x * x, lambda x: 2.0 * x),
    "sin": (np.sin, np.cos),
}


def drift_jacobian(model: ModelSpec, positions: np.ndarray) -> np.ndarray:
    """Dense N x N Jacobian of the interacting drift at given positions."""
    x = np.asarray(positions, dtype=float)
    n = x.size
    if isinstance(model.v_kind, ZeroInteraction):
        return np.diag(-model.u_kind.hess(x))
    if isinstance(model.v_kind, QuadraticInteraction):
        alpha = model.v_kind.alpha
        jac = np.full((n, n), alpha / n)
        jac[np.diag_indices(n)] = -model.u_kind.hess(x) - alpha + alpha / n
        return jac
    diffs = x[:, None] - x[None, :]
    hv = model.v_kind.hess(diffs)
    jac = hv / n
    jac[np.diag_indices(n)] = -model.u_kind.hess(x) - (hv.sum(axis=1) - hv.diagonal()) / n
    return jac


def _drift_second_derivative(model: ModelSpec, positions: np.ndarray) -> np.ndarray:
    """Rank-3 tensor H[i, l, l'] = second derivative of B_i in (x_l, x_l')."""
    x = np.asarray(positions, dtype=float)
    n = x.size
    H = np.zeros((n, n, n))
    d3u = model.u_kind.third(x)
    idx = np.arange(n)
    H[idx, idx, idx] -= d3u
    d3v = model.v_kind.third(x[:, None] - x[None, :])
    if np.any(d3v):
        # -(1/N) sum_j d3V(x_i - x_j) (delta_il - delta_jl)(delta_il' - delta_jl')
        row = d3v.sum(axis=1) / n
        H[idx, idx, idx] -= row
        for i in range(n):
            H[i, i, :] += d3v[i] / n
            H[i, :, i] += d3v[i] / n
            H[i, idx, idx] -= d3v[i] / n
    return H


def first_variation_evolve(model: ModelSpec, path: Sequence[np.ndarray],
                           h: float) -> np.ndarray:
    """Explicit-Euler first variation along a simulated path.

    ``path`` holds the positions at the left endpoint of every step (length
    M for M steps; an empty path returns the identity).  Returns J at the
    final time, entry (i, j) being the sensitivity of particle i to the
    initial position of particle j.
    """
    if len(path) == 0:
        raise ValueError("path must contain at least the initial positions")
    n = np.asarray(path[0]).size
    if n > FIRST_VARIATION_MAX_N:
        raise ValueError(f"dense first variation capped at N={FIRST_VARIATION_MAX_N}")
    jac_matrix = np.eye(n)
    for positions in path[:-1]:
        a = drift_jacobian(model, positions)
        jac_matrix = jac_matrix + h * (a @ jac_matrix)
    return jac_matrix


def second_variation_evolve(model: ModelSpec, path: Sequence[np.ndarray],
                            h: float) -> np.ndarray:
    """Explicit-Euler second variation along a simulated path.

    Returns the N x N x N tensor S at the final time, entry (i, j, k) being
    the second sensitivity of particle i to initial coordinates j and k.
    Starts from zero (no initial displacement enters twice).
    """
    if len(path) == 0:
        raise ValueError("path must contain at least the initial positions")
    n = np.asarray(path[0]).size
    if n > SECOND_VARIATION_MAX_N:
        raise ValueError(f"dense second variation capped at N={SECOND_VARIATION_MAX_N}")
    jac_matrix = np.eye(n)
    s = np.zeros((n, n, n))
    for positions in path[:-1]:
        a = drift_jacobian(model, positions)
        hten = _drift_second_derivative(model, positions)
        source = np.einsum("ilm,lj,mk->ijk", hten, jac_matrix, jac_matrix)
        s = s + h * (np.einsum("il,ljk->ijk", a, s) + source)
        jac_matrix = jac_matrix + h * (a @ jac_matrix)
    return s


def linear_first_variation(alpha: float, n: int, tau: float,
                           curvature: float = 1.0) -> np.ndarray:
    """Closed-form first variation for the quadratic pair.

    The constant Jacobian -(curvature+alpha) I + (alpha/N) ones has the
    all-ones eigenvector at rate curvature and the orthogonal complement at
    rate curvature+alpha, giving the matrix exponential

        diag:     e^{-c tau}/N + (1 - 1/N) e^{-(c+alpha) tau}
        offdiag: (e^{-c tau} - e^{-(c+alpha) tau}) / N.
    """
    slow = np.exp(-curvature * tau)
    fast = np.exp(-(curvature + alpha) * tau)
    out = np.full((n, n), (slow - fast) / n)
    np.fill_diagonal(out, slow / n + (1.0 - 1.0 / n) * fast)
    return out


@dataclass(frozen=True)
class VariationDecaySummary:
    """Monte Carlo decay diagnostics for the first variation process.

    ``column_sums[k]`` estimates sum_i E|J_ij(tau_k)|^p and
    ``offdiag_sums[k]`` the same sum restricted to i != j, averaged over the
    reference column j.  The exponential rates are fitted on the late half
    of the time grid, where the slowest mode dominates.
    """

    taus: np.ndarray
    column_sums: np.ndarray
    offdiag_sums: np.ndarray
    column_rate: float
    offdiag_rate: float
    n: int
    p: int
    mc_samples: int


def variation_decay_summary(model: ModelSpec, mc_samples: int, n: int, p: int,
                            taus: Sequence[float], h: float = 0.01,
                            seed: int = 0, init_mean: float = 0.0,
                            init_std: float = 1.0) -> VariationDecaySummary:
    """Estimate the p-th moment decay of the first variation process.

    Simulates ``mc_samples`` independent particle paths (standard Euler on
    the same grid), evolves J along each, and records the two index sums at
    every requested time.  Rates are exponential fits over the late half of
    ``taus``.
    """
    if p < 2 or p % 2 != 0:
        raise ValueError(f"p must be an even integer >= 2, got {p}")
    if mc_samples < 1:
        raise ValueError("need at least one Monte Carlo sample")
    taus = np.asarray(sorted(taus), dtype=float)
    steps = np.rint(taus / h).astype(int)
    if np.max(np.abs(steps * h - taus)) > 1e-9:
        raise ValueError("every tau must be an integer multiple of h")
    col = np.zeros((mc_samples, taus.size))
    off = np.zeros((mc_samples, taus.size))
    for r in range(mc_samples):
        noise = NoiseSource(seed=seed, h_fine=h, stream=r)
        x = noise.initial_positions(n, init_mean, init_std)
        jac_matrix = np.eye(n)
        record = 0
        for m in range(int(steps[-1]) + 1):
            if record < taus.size and m == steps[record]:
                jp = np.abs(jac_matrix) ** p
                col[r, record] = jp.sum(axis=0).mean()
                off[r, record] = (jp.sum(axis=0) - jp.diagonal()).mean()
                record += 1
            a = drift_jacobian(model, x)
            jac_matrix = jac_matrix + h * (a @ jac_matrix)
            x = x + drift(model, x) * h + model.sigma * noise.increments(n, m + 1)
    column_sums = col.mean(axis=0)
    offdiag_sums = off.mean(axis=0)

    def late_rate(values: np.ndarray) -> float:
        # fitting log10(v) against log10(e^tau) makes the slope the
        # exponential rate (up to sign)
        start = taus.size // 2
        pts = [(np.exp(t), v) for t, v in zip(taus[start:], values[start:]) if v > 0]
        if len(pts) < 2:
            return float("nan")
        slope, _, _ = regression_slope(pts)
        return -slope

    column_rate = late_rate(column_sums)
    offdiag_rate = late_rate(offdiag_sums)
    return VariationDecaySummary(
        taus=taus, column_sums=column_sums, offdiag_sums=offdiag_sums,
        column_rate=column_rate, offdiag_rate=offdiag_rate,
        n=n, p=p, mc_samples=mc_samples)


@dataclass(frozen=True)
class GradientEstimate:
    """Monte Carlo estimate of the N partials of u with standard errors."""

    values: np.ndarray
    std_errors: np.ndarray
    mc_samples: int


def u_gradient_mc(model: ModelSpec, f_kind: str, t: float, x: np.ndarray,
                  t_final: float, mc_samples: int, seed: int,
                  h: float = 0.01, stream: int = 0) -> GradientEstimate:
    """Pathwise gradient of u(t, x) = E[(1/N) sum_i f(X_i(T)) | X(t) = x].

    Per replica, simulates the flow from ``x`` with standard Euler and its
    first variation, then averages sum_i f'(X_i(T))/N * J_ij(T) over
    replicas.  Replicas are vectorized; each owns stream (stream + replica
    block) of the noise source.  Exact at t_final = t (gradient of g).
    """
    if f_kind not in SMOOTH_F:
        raise ValueError(f"f_kind must be one of {tuple(SMOOTH_F)}, got {f_kind!r}")
    x = np.asarray(x, dtype=float)
    n = x.size
    if n > 64:
        raise ValueError("Monte Carlo u-gradient capped at N=64")
    if t_final < t:
        raise ValueError("t_final must be >= t")
    _, fprime = SMOOTH_F[f_kind]
    steps = int(round((t_final - t) / h))
    if abs(steps * h - (t_final - t)) > 1e-9:
        raise ValueError("t_final - t must be an integer multiple of h")
    if steps == 0:
        grad = fprime(x) / n
        return GradientEstimate(values=grad, std_errors=np.zeros(n), mc_samples=0)

    noise = NoiseSource(seed=seed, h_fine=h, stream=stream)
    pos = np.tile(x, (mc_samples, 1))                  # (R, N)
    jac = np.tile(np.eye(n), (mc_samples, 1, 1))       # (R, N, N)
    quad_v = isinstance(model.v_kind, (QuadraticInteraction, ZeroInteraction))
    const_a = drift_jacobian(model, x) if (quad_v and not np.any(model.u_kind.third(x))) else None
    for m in range(steps):
        if const_a is None:
            for r in range(mc_samples):
                a = drift_jacobian(model, pos[r])
                jac[r] = jac[r] + h * (a @ jac[r])
        else:
            jac = jac + h * np.einsum("ik,rkj->rij", const_a, jac)
        b = np.empty_like(pos)
        if quad_v:
            alpha = getattr(model.v_kind, "alpha", 0.0)
            b = -model.u_kind.grad(pos) - alpha * (pos - pos.mean(axis=1, keepdims=True))
        else:
            for r in range(mc_samples):
                b[r] = drift(model, pos[r])
        dw = noise.increments(mc_samples * n, m + 1).reshape(mc_samples, n)
        pos = pos + b * h + model.sigma * dw
    weights = fprime(pos) / n                          # (R, N)
    samples = np.einsum("ri,rij->rj", weights, jac)    # (R, N)
    values = samples.mean(axis=0)
    std_errors = samples.std(axis=0, ddof=1) / np.sqrt(mc_samples)
    return GradientEstimate(values=values, std_errors=std_errors,
                            mc_samples=mc_samples)


def u_value_samples(model: ModelSpec, f_kind: str, t: float, x: np.ndarray,
                    t_final: float, mc_samples: int, seed: int,
                    h: float = 0.01, stream: int = 0) -> np.ndarray:
    """Per-replica Monte Carlo samples of u(t, x) = E[(1/N) sum f(X_i(T))].

    Uses the same noise addressing as :func:`u_gradient_mc`, so calls with
    the same (seed, stream) share Brownian paths: central differences in the
    initial point then benefit from common random numbers, and the standard
    error of the difference comes from the per-replica differences.
    """
    if f_kind not in SMOOTH_F:
        raise ValueError(f"f_kind must be one of {tuple(SMOOTH_F)}, got {f_kind!r}")
    x = np.asarray(x, dtype=float)
    n = x.size
    f, _ = SMOOTH_F[f_kind]
    steps = int(round((t_final - t) / h))
    if abs(steps * h - (t_final - t)) > 1e-9:
        raise ValueError("t_final - t must be an integer multiple of h")
    noise = NoiseSource(seed=seed, h_fine=h, stream=stream)
    pos = np.tile(x, (mc_samples, 1))
    quad_v = isinstance(model.v_kind, (QuadraticInteraction, ZeroInteraction))
    for m in range(steps):
        if quad_v:
            alpha = getattr(model.v_kind, "alpha", 0.0)
            b = -model.u_kind.grad(pos) - alpha * (pos - pos.mean(axis=1, keepdims=True))
        else:
            b = np.stack([drift(model, pos[r]) for r in range(mc_samples)])
        dw = noise.increments(mc_samples * n, m + 1).reshape(mc_samples, n)
        pos = pos + b * h + model.sigma * dw
    return f(pos).mean(axis=1)


def u_value_mc(model: ModelSpec, f_kind: str, t: float, x: np.ndarray,
               t_final: float, mc_samples: int, seed: int,
               h: float = 0.01, stream: int = 0) -> tuple[float, float]:
    """Monte Carlo value of u(t, x) with its standard error."""
    samples = u_value_samples(model, f_kind, t, x, t_final, mc_samples, seed,
                              h=h, stream=stream)
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(mc_samples))
