import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mflsim.model import (
    CubicPerturbed,
    ModelError,
    Quadratic,
    QuadraticInteraction,
    ZeroInteraction,
    build_model,
    check_assumptions,
    grad_u,
    grad_v,
    hess_u,
    hess_v,
)

ALL_U = [Quadratic(1.0), Quadratic(2.5), CubicPerturbed(1.0, 0.01)]
ALL_V = [QuadraticInteraction(0.5), QuadraticInteraction(2.0), ZeroInteraction()]


def finite_diff(fn, x, eps=1e-6):
    return (fn(x + eps) - fn(x - eps)) / (2 * eps)


def second_diff(fn, x, eps=1e-3):
    # our potential kinds are at most cubic, so the central formula is exact
    # up to rounding (~1e-9 at this step size)
    return (fn(x + eps) - 2 * fn(x) + fn(x - eps)) / eps**2


class TestGradients:
    def test_quadratic_grad_values(self):
        model = build_model(Quadratic(1.0), ZeroInteraction(), sigma=1.0)
        assert grad_u(model, 1.0) == 1.0
        assert grad_u(model, 0.0) == 0.0

    def test_quadratic_interaction_grad(self):
        model = build_model(Quadratic(1.0), QuadraticInteraction(0.5), sigma=1.0)
        assert grad_v(model, 2.0) == 1.0

    def test_zero_interaction(self):
        model = build_model(Quadratic(1.0), ZeroInteraction(), sigma=1.0)
        for x in (-3.0, 0.0, 7.5):
            assert grad_v(model, x) == 0.0

    @pytest.mark.parametrize("u_kind", ALL_U)
    @pytest.mark.parametrize("v_kind", ALL_V)
    def test_grad_matches_finite_difference(self, u_kind, v_kind):
        model = build_model(u_kind, v_kind, sigma=1.0)
        x = 0.3
        fd_u = finite_diff(model.u_kind.value, x)
        fd_v = finite_diff(model.v_kind.value, x)
        assert grad_u(model, x) == pytest.approx(fd_u, abs=1e-8)
        assert grad_v(model, x) == pytest.approx(fd_v, abs=1e-8)

    @pytest.mark.parametrize("u_kind", ALL_U)
    @pytest.mark.parametrize("v_kind", ALL_V)
    def test_gradients_on_grid(self, u_kind, v_kind):
        # analytic derivatives track finite differences across the support
        model = build_model(u_kind, v_kind, sigma=1.0)
        grid = np.linspace(-10, 10, 100)
        fd_u = finite_diff(model.u_kind.value, grid)
        fd_v = finite_diff(model.v_kind.value, grid)
        scale_u = np.maximum(np.abs(fd_u), 1.0)
        scale_v = np.maximum(np.abs(fd_v), 1.0)
        assert np.all(np.abs(grad_u(model, grid) - fd_u) / scale_u < 1e-6)
        assert np.all(np.abs(grad_v(model, grid) - fd_v) / scale_v < 1e-6)

    @pytest.mark.parametrize("v_kind", ALL_V)
    def test_grad_v_odd(self, v_kind):
        model = build_model(Quadratic(1.0), v_kind, sigma=1.0)
        grid = np.linspace(-10, 10, 100)
        np.testing.assert_array_equal(grad_v(model, grid), -grad_v(model, -grid))

    @given(x=st.floats(-50, 50))
    @settings(max_examples=50, deadline=None)
    def test_v_even_grad_odd_property(self, x):
        v = QuadraticInteraction(0.7)
        assert v.value(x) == v.value(-x)
        assert v.grad(x) == -v.grad(-x)


class TestHessians:
    def test_quadratic_constant_curvature(self):
        model = build_model(Quadratic(2.5), QuadraticInteraction(0.5), sigma=1.0)
        for x in (-4.0, 0.0, 1.3):
            assert hess_u(model, x) == 2.5
            assert hess_v(model, x) == 0.5

    @pytest.mark.parametrize("u_kind", ALL_U)
    def test_hess_matches_finite_difference(self, u_kind):
        model = build_model(u_kind, ZeroInteraction(), sigma=1.0)
        for x in (-2.0, 0.4, 3.1):
            assert hess_u(model, x) == pytest.approx(
                second_diff(model.u_kind.value, x), abs=1e-6)

    def test_third_derivative_cubic(self):
        u = CubicPerturbed(1.0, 0.02)
        assert u.third(0.0) == pytest.approx(0.04)
        assert Quadratic(1.0).third(5.0) == 0.0


class TestBuildModel:
    def test_defaults_from_kinds(self):
        model = build_model(Quadratic(2.0), QuadraticInteraction(0.3), sigma=1.0)
        assert model.lam == 2.0
        assert model.k_v == 0.3

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ModelError):
            build_model(Quadratic(1.0), ZeroInteraction(), sigma=0.0)

    def test_rejects_nonpositive_lam(self):
        with pytest.raises(ModelError):
            build_model(Quadratic(-1.0), ZeroInteraction(), sigma=1.0)

    def test_rejects_overdeclared_lam(self):
        with pytest.raises(ModelError):
            build_model(Quadratic(1.0), ZeroInteraction(), sigma=1.0, lam=2.0)

    def test_rejects_underdeclared_kv(self):
        with pytest.raises(ModelError):
            build_model(Quadratic(1.0), QuadraticInteraction(0.5), sigma=1.0, k_v=0.1)


class TestCheckAssumptions:
    def test_all_pass_zero_interaction(self):
        model = build_model(Quadratic(1.0), ZeroInteraction(), sigma=1.0)
        report = check_assumptions(model)
        assert report.lam_positive and report.hess_v_bounded
        assert report.convexity_dominates
        assert report.warnings == ()

    def test_reference_parameters_warn_only(self):
        # the benchmark model (alpha=0.5, sigma=0.8) violates lam >= 7 k_v
        model = build_model(Quadratic(1.0), QuadraticInteraction(0.5), sigma=0.8)
        report = check_assumptions(model)
        assert report.lam_positive and report.hess_v_bounded
        assert not report.convexity_dominates
        assert len(report.warnings) == 1

    def test_boundary_case_passes(self):
        model = build_model(Quadratic(7.0), QuadraticInteraction(1.0), sigma=1.0)
        report = check_assumptions(model)
        assert report.convexity_dominates
        assert report.warnings == ()
