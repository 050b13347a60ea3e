"""Independent oracles shared by unit and acceptance tests.

These deliberately avoid the library's own code paths wherever the point is
to cross-check one: matrix exponentials come from scipy, finite differences
are assembled from raw per-replica samples.
"""

import numpy as np
from scipy.linalg import expm

from mflsim.sensitivity import drift_jacobian, u_value_samples


def expm_first_variation(model, positions, tau):
    """scipy matrix exponential of the drift Jacobian (constant-Jacobian models)."""
    return expm(drift_jacobian(model, positions) * tau)


def linear_diag_offdiag(alpha, n, tau, curvature=1.0):
    """Hand-derived eigen-decomposition entries for the quadratic pair."""
    slow = np.exp(-curvature * tau)
    fast = np.exp(-(curvature + alpha) * tau)
    diag = slow / n + (1.0 - 1.0 / n) * fast
    off = (slow - fast) / n
    return diag, off


def crn_fd_gradient(model, f_kind, x, t_final, mc_samples, seed, h=0.01,
                    eps=1e-3):
    """Central finite difference of the Monte Carlo u with common random numbers.

    Returns (gradient, standard errors), where the errors are those of the
    per-replica differences (the correct error bars under path coupling).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    grad = np.empty(n)
    ses = np.empty(n)
    for j in range(n):
        plus = x.copy()
        plus[j] += eps
        minus = x.copy()
        minus[j] -= eps
        up = u_value_samples(model, f_kind, 0.0, plus, t_final, mc_samples,
                             seed=seed, h=h)
        down = u_value_samples(model, f_kind, 0.0, minus, t_final, mc_samples,
                               seed=seed, h=h)
        diff = (up - down) / (2 * eps)
        grad[j] = diff.mean()
        ses[j] = diff.std(ddof=1) / np.sqrt(mc_samples)
    return grad, ses
