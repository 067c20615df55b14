"""Monte Carlo estimate of how often random vortex configurations collapse.

Each sample draws its configuration from its own generator seeded by
``SeedSequence([master_seed, index])``, so results do not depend on scheduling or on
the number of worker processes.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from src.config import settings
from src.errors import AdmissibilityError
from src.kernels.green import as_alpha
from src.vortex.integrator import IntegratorConfig, integrate
from src.vortex.system import VortexSystem, min_pairwise_distance, separation_lower_bound_same_sign

logger = logging.getLogger(__name__)

# Relative slack when comparing observed separations with the analytic lower bound.
BOUND_SLACK = 1e-6


class SamplerSpec(BaseModel):
    """Distribution of random initial configurations.

    Positions are uniform in the square of half-width ``box_half_width`` around the
    origin, intensity magnitudes are uniform in [``intensity_low``, ``intensity_high``],
    and signs are positive unless ``same_sign`` is off, in which case each is a fair coin.
    """

    n_vortices: int = Field(default=3, ge=2)
    box_half_width: float = Field(default=1.0, gt=0.0)
    intensity_low: float = Field(default=0.5, gt=0.0)
    intensity_high: float = Field(default=2.0, gt=0.0)
    same_sign: bool = True
    min_distance: float = Field(default=1e-3, ge=0.0)

    @model_validator(mode="after")
    def _check_range(self) -> "SamplerSpec":
        if self.intensity_high < self.intensity_low:
            raise ValueError("intensity_high must be at least intensity_low")
        return self

    def draw(self, rng: np.random.Generator, alpha: float) -> VortexSystem:
        while True:
            positions = rng.uniform(-self.box_half_width, self.box_half_width, (self.n_vortices, 2))
            if min_pairwise_distance(positions)[0] > self.min_distance:
                break
        magnitudes = rng.uniform(self.intensity_low, self.intensity_high, self.n_vortices)
        if self.same_sign:
            signs = np.ones(self.n_vortices)
        else:
            signs = rng.choice([-1.0, 1.0], self.n_vortices)
        return VortexSystem(magnitudes * signs, positions, alpha)


@dataclass(frozen=True)
class SampleOutcome:
    index: int
    termination: str
    end_time: float
    min_separation: float
    separation_bound: Optional[float]
    bound_violated: bool
    hamiltonian_drift: float
    message: str = ""

    @classmethod
    def failed(cls, index: int, error: Exception) -> "SampleOutcome":
        """Record of a sample whose integration raised; it still counts as a sample."""
        return cls(
            index=index,
            termination="error",
            end_time=math.nan,
            min_separation=math.nan,
            separation_bound=None,
            bound_violated=False,
            hamiltonian_drift=math.nan,
            message=f"{type(error).__name__}: {error}",
        )

    @property
    def collapsed(self) -> bool:
        return self.termination == "collapse_detected"

    @property
    def ok(self) -> bool:
        return self.termination != "error"


@dataclass
class MonteCarloResult:
    outcomes: List[SampleOutcome]
    master_seed: int
    alpha: float

    @property
    def collapse_fraction(self) -> float:
        if not self.outcomes:
            return 0.0
        return sum(o.collapsed for o in self.outcomes) / len(self.outcomes)

    @property
    def bound_violations(self) -> int:
        return sum(o.bound_violated for o in self.outcomes)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(o) for o in self.outcomes])

    def summary(self) -> dict:
        return {
            "samples": len(self.outcomes),
            "collapse_fraction": self.collapse_fraction,
            "collapsed": sum(o.collapsed for o in self.outcomes),
            "bound_violations": self.bound_violations,
            "failed": sum(not o.ok for o in self.outcomes),
            "master_seed": self.master_seed,
            "alpha": self.alpha,
        }


def sample_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, index])


def run_sample(
    index: int,
    system: VortexSystem,
    t_end: float,
    cfg: IntegratorConfig,
) -> SampleOutcome:
    """Integrate one configuration and compare its separations with the same-sign bound."""
    trajectory = integrate(system, t_end, cfg)
    observed = float(trajectory.ledger["min_separation"].min())
    if trajectory.termination.separation is not None:
        observed = min(observed, trajectory.termination.separation)

    bound = None
    violated = False
    if system.same_sign and not system.alpha.is_log:
        try:
            bound = separation_lower_bound_same_sign(system)
            violated = observed < bound * (1.0 - BOUND_SLACK)
        except AdmissibilityError:
            bound = None
    if violated:
        logger.warning(f"Sample {index}: separation {observed:.6g} below bound {bound:.6g}")

    return SampleOutcome(
        index=index,
        termination=trajectory.termination.kind.value,
        end_time=trajectory.final_time,
        min_separation=observed,
        separation_bound=bound,
        bound_violated=violated,
        hamiltonian_drift=trajectory.max_relative_drift("hamiltonian"),
    )


def _drawn_sample(
    index: int,
    sampler: SamplerSpec,
    alpha: float,
    master_seed: int,
    t_end: float,
    cfg: IntegratorConfig,
) -> SampleOutcome:
    rng = np.random.default_rng(sample_seed(master_seed, index))
    return run_sample(index, sampler.draw(rng, alpha), t_end, cfg)


def monte_carlo_collapse(
    n_samples: int,
    sampler: SamplerSpec,
    t_end: float,
    cfg: Optional[IntegratorConfig] = None,
    alpha: float = 0.0,
    master_seed: Optional[int] = None,
    threads: Optional[int] = None,
    extra_systems: Sequence[VortexSystem] = (),
) -> MonteCarloResult:
    """Estimate the fraction of sampled configurations that collapse before ``t_end``.

    Args:
        n_samples: Number of random configurations
        sampler: Distribution of configurations
        t_end: Integration horizon for every sample
        cfg: Integrator settings shared by all samples
        alpha: Order of the kernel
        master_seed: Seed of the run (defaults to ``settings.seed``)
        threads: Worker processes (defaults to ``settings.threads``)
        extra_systems: Fixed configurations appended after the random ones

    Returns:
        MonteCarloResult with one outcome per sample, in index order
    """
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")
    alpha = as_alpha(alpha).alpha
    cfg = cfg or IntegratorConfig()
    master_seed = settings.seed if master_seed is None else master_seed
    threads = threads or settings.threads
    total = n_samples + len(extra_systems)

    logger.info(
        f"Monte Carlo: {n_samples} random + {len(extra_systems)} fixed samples, "
        f"alpha={alpha}, seed={master_seed}, {threads} worker(s)"
    )

    outcomes: List[Optional[SampleOutcome]] = [None] * total

    if threads > 1 and total > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {
                pool.submit(_drawn_sample, i, sampler, alpha, master_seed, t_end, cfg): i
                for i in range(n_samples)
            }
            for j, system in enumerate(extra_systems):
                futures[pool.submit(run_sample, n_samples + j, system, t_end, cfg)] = n_samples + j
            for future in tqdm(futures, total=total, desc="Sampling"):
                index = futures[future]
                try:
                    outcomes[index] = future.result()
                except Exception as e:
                    logger.error(f"Sample {index} failed: {e}")
                    outcomes[index] = SampleOutcome.failed(index, e)
    else:
        for index in tqdm(range(total), desc="Sampling"):
            try:
                if index < n_samples:
                    outcomes[index] = _drawn_sample(index, sampler, alpha, master_seed, t_end, cfg)
                else:
                    outcomes[index] = run_sample(index, extra_systems[index - n_samples], t_end, cfg)
            except Exception as e:
                logger.error(f"Sample {index} failed: {e}")
                outcomes[index] = SampleOutcome.failed(index, e)

    result = MonteCarloResult(outcomes=outcomes, master_seed=master_seed, alpha=alpha)
    failures = sum(not o.ok for o in result.outcomes)
    if failures:
        logger.warning(f"{failures} of {total} samples failed; they count as non-collapsing")
    logger.info(
        f"Collapse fraction {result.collapse_fraction:.4f}, "
        f"bound violations {result.bound_violations}"
    )
    return result
