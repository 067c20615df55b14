"""Check of the gSQG scaling symmetry theta_lam(t, x) = lam^-2 theta(lam^{-2-alpha} t, x / lam)."""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.errors import AdmissibilityError, ResolutionError
from src.kernels.green import AlphaParam, as_alpha
from src.spectral.field import Grid, ScalarField
from src.spectral.solver import DealiasRule, SolverParams, run

logger = logging.getLogger(__name__)

MIN_POINTS_ACROSS = 8

Profile = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ScalingCheck:
    rel_error: float
    t_original: float
    t_scaled: float
    points_across: float
    compared_points: int


def _matched_indices(n: int, lam: float):
    """Grid indices i of the scaled field whose preimage center + (x_i - center) / lam is also
    a grid point, together with those preimage indices."""
    center = n // 2
    offsets = np.arange(n) - center
    if lam >= 1.0:
        ratio = int(round(lam))
        keep = offsets % ratio == 0
        return np.nonzero(keep)[0], center + offsets[keep] // ratio
    ratio = int(round(1.0 / lam))
    pre = center + offsets * ratio
    keep = (pre >= 0) & (pre < n)
    return np.nonzero(keep)[0], pre[keep]


def scaling_symmetry_check(
    theta0: Profile,
    p: AlphaParam,
    lam: float,
    grid: Grid,
    t_end: float,
    dt: float,
    core_diameter: float,
    dealias: DealiasRule = DealiasRule.TWO_THIRDS,
) -> ScalingCheck:
    """Run theta0 and its rescaling on the same grid and compare them at matched times.

    ``theta0`` is a profile f(x1, x2) concentrated near the grid center, ``core_diameter``
    the diameter of its core. The rescaled datum is lam^-2 theta0(center + (x - center) / lam);
    it is run to ``t_end`` with step ``dt`` while the original is run to lam^{-2-alpha} t_end
    with the correspondingly rescaled step, so both take the same number of steps.
    Comparison uses the grid points whose preimage under the scaling is also a grid point,
    which restricts ``lam`` to powers of two.

    Raises:
        ResolutionError: if either blob has fewer than 8 grid points across its core
        AdmissibilityError: if lam is not a power of two
    """
    p = as_alpha(p)
    exponent = math.log2(lam) if lam > 0.0 else math.nan
    if not math.isfinite(exponent) or exponent != round(exponent):
        raise AdmissibilityError(f"lam must be a power of two, got {lam}")

    points_across = core_diameter * min(1.0, lam) / grid.dx
    if points_across < MIN_POINTS_ACROSS:
        raise ResolutionError(
            f"rescaled blob has {points_across:.2f} grid points across its core; "
            f"at least {MIN_POINTS_ACROSS} are needed"
        )

    cx, cy = grid.center
    time_factor = lam ** (-2.0 - p.alpha)

    def scaled_profile(x1, x2):
        return lam**-2 * theta0(cx + (x1 - cx) / lam, cy + (x2 - cy) / lam)

    original = ScalarField.from_function(grid, theta0)
    scaled = ScalarField.from_function(grid, scaled_profile)

    t_original = time_factor * t_end
    params_original = SolverParams(alpha=p, dt=time_factor * dt, t_end=t_original, dealias=dealias)
    params_scaled = SolverParams(alpha=p, dt=dt, t_end=t_end, dealias=dealias)

    logger.info(f"Scaling check: lam={lam}, alpha={p.alpha}, n={grid.n}, T={t_end}")
    final_original = run(original, params_original).final.values
    final_scaled = run(scaled, params_scaled).final.values

    idx, pre = _matched_indices(grid.n, lam)
    lhs = final_scaled[np.ix_(idx, idx)]
    rhs = lam**-2 * final_original[np.ix_(pre, pre)]
    scale = max(float(np.max(np.abs(final_scaled))), np.finfo(float).tiny)
    rel_error = float(np.max(np.abs(lhs - rhs)) / scale)
    return ScalingCheck(
        rel_error=rel_error,
        t_original=t_original,
        t_scaled=t_end,
        points_across=points_across,
        compared_points=int(idx.size * idx.size),
    )
