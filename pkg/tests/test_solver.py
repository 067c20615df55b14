"""Tests for the pseudo-spectral gSQG solver."""

import math

import numpy as np
import pytest

from src.errors import AdmissibilityError, SolverInstabilityError
from src.kernels.green import DissipationParam, as_alpha
from src.spectral.field import Grid, ScalarField, gaussian_blob
from src.spectral.solver import (
    DealiasRule,
    SolverParams,
    cfl_step,
    conservative_nonlinear_term,
    nonlinear_term,
    observables,
    run,
    step,
    velocity_from_theta,
)


def smooth_field(grid):
    x1, x2 = grid.mesh()
    return ScalarField(grid, values=np.sin(x1) * np.cos(2 * x2) + 0.5 * np.cos(3 * x1 - x2) + 0.2 * np.sin(x2))


def two_gaussians(grid):
    c = grid.center
    first = gaussian_blob(grid, (c[0] - 0.8, c[1]), 0.5)
    second = gaussian_blob(grid, (c[0] + 0.8, c[1] + 0.2), 0.5)
    return first.with_values(first.values + second.values)


class TestSolverParams:
    def test_coerces_alpha(self):
        params = SolverParams(alpha=0.5, dt=0.1)
        assert params.alpha == as_alpha(0.5)
        assert params.diss.inviscid
        assert params.dealias is DealiasRule.TWO_THIRDS

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            SolverParams(alpha=0.5, dt=0.0)
        with pytest.raises(ValueError):
            SolverParams(alpha=2.0, dt=0.1)

    def test_cfl(self, grid64):
        theta = two_gaussians(grid64)
        bound = cfl_step(theta, as_alpha(0.5), 0.5)
        assert SolverParams(alpha=0.5, dt=bound / 2).check_cfl(theta) == pytest.approx(bound)
        with pytest.raises(AdmissibilityError):
            SolverParams(alpha=0.5, dt=2 * bound).check_cfl(theta)

    def test_cfl_of_constant_field(self, grid64):
        constant = ScalarField(grid64, values=np.ones((64, 64)))
        assert math.isinf(cfl_step(constant, as_alpha(1.0), 0.5))


class TestNonlinearTerm:
    def test_velocity_is_divergence_free(self, grid64):
        u1, u2 = velocity_from_theta(smooth_field(grid64), as_alpha(0.5))
        k1, k2 = grid64.wavevectors()
        np.testing.assert_allclose(k1 * u1.spectral + k2 * u2.spectral, 0.0, atol=1e-9)
        assert abs(u1.integral()) < 1e-12 and abs(u2.integral()) < 1e-12

    def test_shear_mode_is_steady(self, grid64):
        x1, _ = grid64.mesh()
        theta = ScalarField(grid64, values=np.cos(2 * x1))
        np.testing.assert_allclose(nonlinear_term(theta, as_alpha(1.0)).values, 0.0, atol=1e-12)

    @pytest.mark.parametrize("rule", list(DealiasRule))
    def test_advective_equals_conservative(self, grid64, rule):
        theta = smooth_field(grid64)
        p = as_alpha(0.5)
        np.testing.assert_allclose(
            nonlinear_term(theta, p, rule).values, conservative_nonlinear_term(theta, p, rule).values, atol=1e-11
        )

    def test_three_halves_matches_two_thirds_for_low_modes(self, grid64):
        theta = smooth_field(grid64)
        p = as_alpha(1.0)
        np.testing.assert_allclose(
            nonlinear_term(theta, p, DealiasRule.THREE_HALVES).values,
            nonlinear_term(theta, p, DealiasRule.TWO_THIRDS).values,
            atol=1e-11,
        )

    def test_zero_mean(self, grid64):
        out = nonlinear_term(smooth_field(grid64), as_alpha(0.5))
        assert out.spectral[0, 0] == 0.0

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.5])
    def test_velocity_of_a_unit_mode(self, grid64, alpha):
        x1, _ = grid64.mesh()
        u1, u2 = velocity_from_theta(ScalarField(grid64, values=np.sin(x1)), as_alpha(alpha))
        np.testing.assert_allclose(u1.values, 0.0, atol=1e-13)
        np.testing.assert_allclose(u2.values, np.cos(x1), atol=1e-13)

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
    def test_two_mode_products(self, grid64, alpha):
        x1, x2 = grid64.mesh()
        p = as_alpha(alpha)
        # modes with |k| = 1 advect each other to zero
        same_shell = ScalarField(grid64, values=np.cos(x1) + np.cos(x2))
        np.testing.assert_allclose(nonlinear_term(same_shell, p).values, 0.0, atol=1e-12)
        # psi = cos x1 + 2^(alpha-2) cos 2x2, so u . grad theta = (2 - 2^(alpha-1)) sin x1 sin 2x2
        mixed = ScalarField(grid64, values=np.cos(x1) + np.cos(2 * x2))
        expected = (2.0 - 2.0 ** (alpha - 1.0)) * np.sin(x1) * np.sin(2 * x2)
        np.testing.assert_allclose(nonlinear_term(mixed, p).values, expected, atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 1.5])
    def test_advection_is_skew(self, grid64, alpha):
        theta = gaussian_blob(grid64, tuple(grid64.center), 0.4)
        advection = nonlinear_term(theta, as_alpha(alpha))
        assert abs(theta.inner(advection)) <= 1e-10 * theta.lp_norm(2.0) ** 2


class TestStep:
    def test_steady_mode_unchanged(self, grid64):
        x1, _ = grid64.mesh()
        theta = ScalarField(grid64, values=np.cos(x1))
        new = step(theta, SolverParams(alpha=0.5, dt=0.1))
        np.testing.assert_allclose(new.values, theta.values, atol=1e-13)

    def test_dissipation_is_exact_for_a_mode(self, grid64):
        x1, x2 = grid64.mesh()
        theta = ScalarField(grid64, values=np.cos(3 * x1 + 4 * x2))
        params = SolverParams(alpha=0.5, diss=DissipationParam(gamma=1.0, kappa=0.1), dt=0.2)
        new = step(theta, params)
        np.testing.assert_allclose(new.values, math.exp(-0.1 * 5.0 * 0.2) * theta.values, atol=1e-13)

    def test_blow_up_raises(self, grid64):
        theta = smooth_field(grid64).scaled(100.0)
        with pytest.raises(SolverInstabilityError, match="sup norm"):
            step(theta, SolverParams(alpha=0.5, dt=10.0))

    def test_fourth_order_in_time(self):
        grid = Grid(32)
        theta0 = smooth_field(grid)
        diss = DissipationParam(gamma=2.0, kappa=0.01)
        t_end = 0.4

        def evolve(steps):
            params = SolverParams(alpha=0.5, diss=diss, dt=t_end / steps)
            theta = theta0
            for _ in range(steps):
                theta = step(theta, params)
            return theta.values

        reference = evolve(320)
        errors = [np.max(np.abs(evolve(steps) - reference)) for steps in (20, 40)]
        order = math.log2(errors[0] / errors[1])
        assert order >= 3.8


class TestObservables:
    def test_hamiltonian_of_a_mode(self, grid64):
        x1, _ = grid64.mesh()
        obs = observables(ScalarField(grid64, values=np.cos(x1)), as_alpha(0.5))
        assert obs["hamiltonian"] == pytest.approx(math.pi**2)
        assert obs["max"] == pytest.approx(1.0)
        assert obs["min"] == pytest.approx(-1.0)
        assert obs["max_grad"] == pytest.approx(1.0)


class TestRun:
    def test_lands_on_t_end(self, grid64):
        record = run(two_gaussians(grid64), SolverParams(alpha=0.5, dt=0.03, t_end=0.1))
        assert record.steps == 4
        assert record.t_final == pytest.approx(0.1)
        assert record.series["t"].iloc[-1] == pytest.approx(0.1)

    def test_stride_and_observers(self, grid64):
        seen = []

        def observer(t, theta):
            seen.append(t)
            return {"mass": theta.integral()}

        record = run(two_gaussians(grid64), SolverParams(alpha=0.5, dt=0.01, t_end=0.1), [observer], stride=3)
        assert len(record.series) == len(seen) == 5  # 0, 3, 6, 9, 10
        assert "mass" in record.series.columns
        with pytest.raises(ValueError):
            run(two_gaussians(grid64), SolverParams(alpha=0.5, dt=0.01), stride=0)

    def test_inviscid_conservation(self, grid64):
        theta0 = two_gaussians(grid64)
        record = run(theta0, SolverParams(alpha=0.5, dt=0.01, t_end=0.5))
        series = record.series
        assert abs(record.final.integral() - theta0.integral()) <= 1e-12 * theta0.integral()
        assert abs(series["l2"].iloc[-1] / series["l2"].iloc[0] - 1.0) <= 1e-6
        assert abs(series["hamiltonian"].iloc[-1] / series["hamiltonian"].iloc[0] - 1.0) <= 1e-6
        assert series["min"].min() >= -1e-3 * theta0.lp_norm(math.inf)

    def test_dissipative_norms_nonincreasing(self, grid64):
        theta0 = gaussian_blob(grid64, tuple(grid64.center), 0.5)
        params = SolverParams(alpha=0.5, diss=DissipationParam(gamma=1.0, kappa=1e-3), dt=0.01, t_end=0.5)
        series = run(theta0, params).series
        for column in ("l1", "l2", "linf"):
            assert np.all(np.diff(series[column].to_numpy()) <= 1e-10)

    def test_keep_snapshots(self, grid64):
        record = run(two_gaussians(grid64), SolverParams(alpha=0.5, dt=0.05, t_end=0.1), keep_snapshots=True)
        assert [t for t, _ in record.snapshots] == pytest.approx([0.0, 0.05, 0.1])

    def test_cfl_violation_is_rejected(self, grid64):
        with pytest.raises(AdmissibilityError):
            run(two_gaussians(grid64), SolverParams(alpha=0.5, dt=10.0, t_end=10.0))

    @pytest.mark.slow
    def test_inviscid_conservation_n256(self):
        grid = Grid(256)
        theta0 = two_gaussians(grid)
        series = run(theta0, SolverParams(alpha=0.5, dt=0.0025, t_end=1.0)).series
        assert abs(series["l2"].iloc[-1] / series["l2"].iloc[0] - 1.0) <= 1e-6
        assert abs(series["hamiltonian"].iloc[-1] / series["hamiltonian"].iloc[0] - 1.0) <= 1e-6
