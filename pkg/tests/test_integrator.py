"""Tests for the adaptive Dormand-Prince integrator."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.vortex.integrator import (
    LEDGER_COLUMNS,
    IntegratorConfig,
    TerminationKind,
    integrate,
)
from src.vortex.system import (
    VortexSystem,
    collapse_example,
    collapsing_example,
    pairwise_distance_ratios,
    rotation_period,
    two_vortex_solution,
)

TIGHT = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)


class TestIntegratorConfig:
    def test_defaults(self):
        cfg = IntegratorConfig()
        assert cfg.rel_tol == 1e-10
        assert cfg.abs_tol == 1e-12
        assert cfg.eps_reg is None

    def test_rejects_inconsistent_steps(self):
        with pytest.raises(ValueError):
            IntegratorConfig(first_step=1.0, max_step=0.1)
        with pytest.raises(ValueError):
            IntegratorConfig(rel_tol=0.0)


class TestIntegrate:
    def test_negative_horizon(self):
        with pytest.raises(ValueError):
            integrate(VortexSystem([1.0], [[0, 0]]), -1.0)

    def test_zero_horizon(self):
        sys = VortexSystem([1.0, 1.0], [[0, 0], [1, 0]], 0.5)
        trajectory = integrate(sys, 0.0)
        assert trajectory.termination.kind is TerminationKind.COMPLETED
        assert trajectory.times.tolist() == [0.0]
        assert list(trajectory.ledger.columns) == LEDGER_COLUMNS

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 1.9])
    def test_single_vortex_is_stationary(self, alpha):
        sys = VortexSystem([2.0], [[0.3, -0.7]], alpha)
        trajectory = integrate(sys, 10.0)
        assert trajectory.termination.kind is TerminationKind.COMPLETED
        assert trajectory.final_time == 10.0
        np.testing.assert_allclose(trajectory.final_positions, sys.positions, atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.5])
    def test_two_vortex_rotation(self, alpha):
        sys = VortexSystem([1.0, 1.0], [[-0.5, 0.0], [0.5, 0.0]], alpha)
        period = rotation_period(sys)
        trajectory = integrate(sys, period, TIGHT)
        separation = trajectory.ledger["min_separation"].to_numpy()
        assert np.max(np.abs(separation / separation[0] - 1.0)) <= 1e-9
        np.testing.assert_allclose(trajectory.final_positions, two_vortex_solution(sys, period), atol=1e-6)

    def test_times_strictly_increasing(self):
        sys = VortexSystem([1.0, 2.0, 0.5], [[0, 0], [1, 0], [0, 1]], 0.5)
        trajectory = integrate(sys, 2.0)
        assert np.all(np.diff(trajectory.times) > 0.0)
        assert len(trajectory.times) == len(trajectory.states) == len(trajectory.ledger)

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 1.5])
    def test_conservation(self, alpha):
        sys = VortexSystem([1.0, 2.0, 0.5, 1.5], [[0, 0], [0.2, 0], [0, 0.24], [-0.16, 0.08]], alpha)
        trajectory = integrate(sys, 0.2)
        assert trajectory.max_relative_drift("hamiltonian") <= 1e-7
        assert trajectory.max_relative_drift("inertia") <= 1e-7
        assert trajectory.max_relative_drift("m1") <= 1e-7

    def test_dense_output_matches_closed_form(self):
        sys = VortexSystem([1.0, 2.0], [[0, 0], [1, 0]], 0.5)
        trajectory = integrate(sys, 3.0, TIGHT)
        times = np.linspace(0.0, 3.0, 13)
        sampled = trajectory.sample(times)
        for t, positions in zip(times, sampled):
            np.testing.assert_allclose(positions, two_vortex_solution(sys, t), atol=1e-8)
        with pytest.raises(ValueError):
            trajectory.sample([4.0])

    def test_time_reversal(self):
        sys = VortexSystem([1.0, 2.0, 0.5], [[0, 0], [1, 0], [0, 1]], 0.5)
        forward = integrate(sys, 1.0, TIGHT)
        back = integrate(forward.final_system().reversed(), 1.0, TIGHT)
        np.testing.assert_allclose(back.final_positions, sys.positions, atol=1e-8)

    @given(st.permutations(range(4)))
    @settings(max_examples=10, deadline=None)
    def test_permutation_equivariance(self, order):
        sys = VortexSystem([1.0, 2.0, 0.5, -0.7], [[0, 0], [1, 0], [0, 1], [0.8, 0.9]], 0.5)
        base = integrate(sys, 0.5, TIGHT)
        permuted = integrate(sys.permuted(order), 0.5, TIGHT)
        assert permuted.termination.kind is base.termination.kind
        np.testing.assert_allclose(permuted.final_positions, base.final_positions[list(order)], atol=1e-9)
        np.testing.assert_allclose(
            permuted.ledger["hamiltonian"].iloc[-1], base.ledger["hamiltonian"].iloc[-1], rtol=1e-9
        )

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.5])
    def test_regularized_agrees_away_from_the_core(self, alpha):
        sys = VortexSystem([1.0, 2.0, 0.5], [[0, 0], [1, 0], [0, 1]], alpha)
        eps_reg = 0.05
        plain = integrate(sys, 1.0)
        regularized = integrate(sys, 1.0, IntegratorConfig(eps_reg=eps_reg))
        assert regularized.ledger["min_separation"].min() > 2.0 * eps_reg
        rel_tol = IntegratorConfig().rel_tol
        scale = np.max(np.abs(plain.final_positions))
        np.testing.assert_allclose(
            regularized.final_positions, plain.final_positions, atol=10.0 * rel_tol * scale
        )

    def test_max_steps_gives_step_failure(self):
        sys = VortexSystem([1.0, 2.0], [[0, 0], [1, 0]], 0.5)
        trajectory = integrate(sys, 100.0, IntegratorConfig(max_steps=5))
        assert trajectory.termination.kind is TerminationKind.STEP_FAILURE
        assert trajectory.final_time < 100.0

    def test_deterministic(self):
        sys = VortexSystem([1.0, 2.0, 0.5], [[0, 0], [1, 0], [0, 1]], 1.0)
        first = integrate(sys, 1.0)
        second = integrate(sys, 1.0)
        assert first.states.tobytes() == second.states.tobytes()
        assert first.ledger.equals(second.ledger)


class TestCollapse:
    def test_self_similar_collapse(self):
        trajectory = integrate(collapsing_example(0.0), 100.0, TIGHT)
        termination = trajectory.termination
        assert termination.kind is TerminationKind.COLLAPSE_DETECTED
        assert termination.separation < 1e-3
        assert termination.bracket[0] < termination.bracket[1] == termination.time
        assert trajectory.ledger["min_separation"].min() > termination.separation

        keep = trajectory.ledger["min_separation"].to_numpy() >= 1e-2
        ratios = np.array([pairwise_distance_ratios(x) for x in trajectory.states[keep]])
        np.testing.assert_allclose(ratios, np.broadcast_to(ratios[0], ratios.shape), rtol=1e-4)

    def test_literal_datum_spreads_forward(self):
        trajectory = integrate(collapse_example(0.0), 1.0, TIGHT)
        assert trajectory.termination.kind is TerminationKind.COMPLETED
        separation = trajectory.ledger["min_separation"].to_numpy()
        assert separation[-1] > separation[0]

    def test_literal_datum_collapses_backward(self):
        trajectory = integrate(collapse_example(0.0).reversed(), 100.0, TIGHT)
        assert trajectory.termination.kind is TerminationKind.COLLAPSE_DETECTED

    def test_regularized_kernel_passes_through(self):
        cfg = IntegratorConfig(eps_reg=0.05, collapse_threshold=1e-12)
        trajectory = integrate(collapsing_example(0.0), 1.0, cfg)
        assert trajectory.eps_reg == 0.05
        assert trajectory.termination.kind is TerminationKind.COMPLETED
        assert trajectory.final_time == 1.0
