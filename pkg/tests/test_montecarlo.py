"""Tests for the Monte Carlo collapse estimator."""

import numpy as np
import pytest

from src.errors import SolverInstabilityError
from src.vortex import montecarlo
from src.vortex.montecarlo import SamplerSpec, monte_carlo_collapse, sample_seed
from src.vortex.system import VortexSystem, collapsing_example


class TestSamplerSpec:
    def test_draw_respects_spec(self):
        spec = SamplerSpec(n_vortices=4, min_distance=0.2)
        sys = spec.draw(np.random.default_rng(0), 0.5)
        assert sys.n == 4
        assert sys.same_sign
        assert np.all(np.abs(sys.positions) <= 1.0)
        assert np.all((sys.intensities >= 0.5) & (sys.intensities <= 2.0))

    def test_mixed_sign(self):
        spec = SamplerSpec(n_vortices=30, same_sign=False)
        sys = spec.draw(np.random.default_rng(1), 0.0)
        assert np.any(sys.intensities < 0) and np.any(sys.intensities > 0)

    def test_rejects_bad_range(self):
        with pytest.raises(ValueError):
            SamplerSpec(intensity_low=2.0, intensity_high=1.0)

    def test_seed_streams_are_independent_of_order(self):
        a = np.random.default_rng(sample_seed(7, 3)).uniform()
        b = np.random.default_rng(sample_seed(7, 3)).uniform()
        c = np.random.default_rng(sample_seed(7, 4)).uniform()
        assert a == b != c


class TestMonteCarlo:
    def test_same_sign_samples_respect_bound(self):
        result = monte_carlo_collapse(6, SamplerSpec(n_vortices=3, min_distance=0.1), 0.5, alpha=0.5, master_seed=11)
        assert len(result.outcomes) == 6
        assert result.bound_violations == 0
        assert result.collapse_fraction == 0.0
        assert all(o.separation_bound is not None for o in result.outcomes)

    def test_reproducible(self):
        spec = SamplerSpec(n_vortices=3, min_distance=0.1)
        first = monte_carlo_collapse(4, spec, 0.3, alpha=1.0, master_seed=5)
        second = monte_carlo_collapse(4, spec, 0.3, alpha=1.0, master_seed=5)
        assert first.to_frame().equals(second.to_frame())

    def test_extra_collapsing_system(self):
        result = monte_carlo_collapse(
            0, SamplerSpec(), 100.0, alpha=0.0, master_seed=1, extra_systems=[collapsing_example(0.0)]
        )
        assert result.collapse_fraction == 1.0
        summary = result.summary()
        assert summary["samples"] == 1
        assert summary["collapsed"] == 1

    def test_negative_sample_count(self):
        with pytest.raises(ValueError):
            monte_carlo_collapse(-1, SamplerSpec(), 1.0)

    def test_failing_sample_is_recorded(self, monkeypatch):
        real_integrate = montecarlo.integrate

        def integrate_or_fail(system, t_end, cfg):
            if system.n == 2:
                raise SolverInstabilityError("step size underflow")
            return real_integrate(system, t_end, cfg)

        monkeypatch.setattr(montecarlo, "integrate", integrate_or_fail)
        pair = VortexSystem([1.0, 1.0], [[0.0, 0.0], [1.0, 0.0]], 0.5)
        result = monte_carlo_collapse(
            2, SamplerSpec(n_vortices=3, min_distance=0.1), 0.2, alpha=0.5, master_seed=4, threads=1, extra_systems=[pair]
        )
        assert len(result.outcomes) == 3
        failed = result.outcomes[2]
        assert failed.index == 2
        assert failed.termination == "error"
        assert failed.message == "SolverInstabilityError: step size underflow"
        assert not failed.collapsed and not failed.bound_violated
        assert all(o.ok for o in result.outcomes[:2])

        summary = result.summary()
        assert summary["samples"] == 3
        assert summary["failed"] == 1
        frame = result.to_frame()
        assert frame["termination"].tolist()[-1] == "error"
        assert frame["message"].tolist()[:2] == ["", ""]

    def test_failures_stay_in_the_denominator(self, monkeypatch):
        real_integrate = montecarlo.integrate

        def integrate_or_fail(system, t_end, cfg):
            if system.n == 2:
                raise RuntimeError("boom")
            return real_integrate(system, t_end, cfg)

        monkeypatch.setattr(montecarlo, "integrate", integrate_or_fail)
        pair = VortexSystem([1.0, 1.0], [[0.0, 0.0], [1.0, 0.0]], 0.0)
        result = monte_carlo_collapse(
            0, SamplerSpec(), 100.0, alpha=0.0, master_seed=1, threads=1, extra_systems=[collapsing_example(0.0), pair]
        )
        assert result.collapse_fraction == 0.5

    @pytest.mark.slow
    def test_two_hundred_same_sign_samples(self):
        result = monte_carlo_collapse(200, SamplerSpec(n_vortices=5, min_distance=0.05), 5.0, alpha=0.5, master_seed=3)
        assert result.bound_violations == 0
