import numpy as np
import pytest
from scipy.integrate import quad

from mflsim import exact_law
from mflsim.integrators import SchemeConfig, simulate
from mflsim.model import Quadratic, QuadraticInteraction, ZeroInteraction, build_model

REFERENCE = build_model(Quadratic(1.0), QuadraticInteraction(0.5), sigma=0.8)


class TestStationaryChainVariance:
    def test_euler_inflation_factor(self):
        v = exact_law.stationary_chain_variance("euler", REFERENCE, 0.16)
        assert v == pytest.approx(0.242424, abs=1e-6)

    def test_nm_h_free(self):
        for h in (0.04, 0.16, 0.48):
            v = exact_law.stationary_chain_variance("nm", REFERENCE, h)
            assert v == pytest.approx(0.64 / 3.0, abs=1e-12)


class TestChainMarginal:
    def test_matches_stationary_limit(self):
        law = exact_law.chain_marginal("euler", REFERENCE, 10**6, 0.16, 400, 0.0, 0.3)
        assert law.variance == pytest.approx(
            exact_law.stationary_chain_variance("euler", REFERENCE, 0.16), rel=1e-5)

    def test_mean_contraction(self):
        law = exact_law.chain_marginal("nm", REFERENCE, 100, 0.1, 7, 2.0, 1.0)
        assert law.mean == pytest.approx(2.0 * 0.9**7)

    @pytest.mark.parametrize("scheme", ["euler", "nm"])
    def test_against_brute_force(self, scheme):
        n, h, steps = 20000, 0.2, 40
        cfg = SchemeConfig(scheme=scheme, h=h, steps=steps, n_particles=n,
                           seed=99, init_mean=1.0, init_std=1.0)
        final = simulate(cfg, REFERENCE).final.positions
        law = exact_law.chain_marginal(scheme, REFERENCE, n, h, steps, 1.0, 1.0)
        var_se = law.variance * np.sqrt(2.0 / n)
        assert abs(final.var() - law.variance) < 4 * var_se
        assert abs(final.mean() - law.mean) < 4 * np.sqrt(law.variance / n)

    def test_postprocessed_hat_state_trails_nm(self):
        nm = exact_law.chain_marginal("nm", REFERENCE, 100, 0.1, 20, 0.5, 1.0)
        hat = exact_law.chain_marginal("postprocessed", REFERENCE, 100, 0.1,
                                       20, 0.5, 1.0)
        assert hat.mean == nm.mean
        assert hat.variance == pytest.approx(
            nm.variance - REFERENCE.sigma**2 * 0.1 / 4.0, rel=1e-12)

    def test_postprocessed_against_brute_force(self):
        n, h, steps = 20000, 0.16, 120
        cfg = SchemeConfig(scheme="postprocessed", h=h, steps=steps,
                           n_particles=n, seed=21, init_mean=1.0, init_std=1.0)
        final = simulate(cfg, REFERENCE).final.positions
        law = exact_law.chain_marginal("postprocessed", REFERENCE, n, h, steps,
                                       1.0, 1.0)
        assert abs(final.var() - law.variance) < 4 * law.variance * np.sqrt(2.0 / n)


class TestIpsMarginal:
    def test_long_time_limit(self):
        law = exact_law.ips_marginal(REFERENCE, 10**7, 60.0, np.pi, 1.0)
        assert law.mean == pytest.approx(0.0, abs=1e-12)
        assert law.variance == pytest.approx(0.64 / 3.0, rel=1e-5)

    def test_zero_time_identity(self):
        law = exact_law.ips_marginal(REFERENCE, 100, 0.0, 1.5, 0.7)
        assert law.mean == 1.5
        assert law.variance == pytest.approx(0.7)

    def test_small_h_chain_converges_to_ips(self):
        t = 2.0
        ips = exact_law.ips_marginal(REFERENCE, 1000, t, 1.0, 1.0)
        gaps = []
        for h in (0.02, 0.01, 0.005):
            chain = exact_law.chain_marginal("euler", REFERENCE, 1000,
                                             h, int(t / h), 1.0, 1.0)
            gaps.append(abs(chain.variance - ips.variance)
                        + abs(chain.mean - ips.mean))
        assert gaps[2] < gaps[1] < gaps[0]
        assert gaps[1] / gaps[2] == pytest.approx(2.0, rel=0.2)

    def test_requires_quadratic_pair(self):
        from mflsim.model import CubicPerturbed
        model = build_model(CubicPerturbed(1.0, 0.01), ZeroInteraction(), sigma=1.0)
        with pytest.raises(ValueError):
            exact_law.ips_marginal(model, 10, 1.0, 0.0, 1.0)


class TestFunctionalMeans:
    def test_positive_part_against_quadrature(self):
        mean, var = 0.3, 0.8
        expected, _ = quad(
            lambda x: max(x, 0.0) * np.exp(-0.5 * (x - mean) ** 2 / var)
            / np.sqrt(2 * np.pi * var), -np.inf, np.inf)
        got = exact_law.positive_part_mean(mean, var)
        assert got == pytest.approx(expected, rel=1e-9)

    def test_centred_half_normal(self):
        v = 0.64 / 3.0
        got = exact_law.gaussian_functional_mean("positive_part", 0.0, v)
        assert got == pytest.approx(np.sqrt(v) / np.sqrt(2 * np.pi), rel=1e-12)

    def test_identity_and_square(self):
        assert exact_law.gaussian_functional_mean("identity", 1.5, 2.0) == 1.5
        assert exact_law.gaussian_functional_mean("square", 1.5, 2.0) == pytest.approx(4.25)
