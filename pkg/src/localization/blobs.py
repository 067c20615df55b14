"""Concentrated blob initial data and the grid-resolution rule that goes with it.

Blob centers and vortex positions are free-space coordinates whose origin is the center
of the periodic box; a point x sits at ``grid.center + x`` on the grid.
"""

import logging
import math
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.integrate import quad

from src.config import settings
from src.errors import CutoffSupportError, ResolutionError, SupportOverlapError
from src.spectral.field import Grid, ScalarField
from src.vortex.system import min_pairwise_distance

logger = logging.getLogger(__name__)

MIN_POINTS_ACROSS = 8


def bump_chi(r2: np.ndarray) -> np.ndarray:
    """chi = exp(-1 / (1 - |x|^2)) inside the unit ball, 0 outside; takes |x|^2."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


@lru_cache(maxsize=1)
def chi_l1_norm() -> float:
    """||chi||_1 over the plane, by radial quadrature."""
    value, _ = quad(lambda r: 2.0 * math.pi * r * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0)
    return value


CHI_SUP = math.exp(-1.0)


class BlobSpec(BaseModel):
    """N radial blobs of masses a_i and core diameter d0 * eps.

    ``d0`` defaults to the minimum distance between centers (and must be given when
    N = 1). With ``same_sign`` on, mixed-sign intensities are rejected.
    """

    centers: List[Tuple[float, float]]
    intensities: List[float]
    eps: float = Field(gt=0.0, le=1.0)
    d0: Optional[float] = Field(default=None, gt=0.0)
    same_sign: bool = True

    @field_validator("intensities")
    @classmethod
    def _nonzero(cls, value: List[float]) -> List[float]:
        if any(a == 0.0 for a in value):
            raise ValueError("intensities must be nonzero")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "BlobSpec":
        if len(self.centers) != len(self.intensities) or not self.centers:
            raise ValueError("need one intensity per center and at least one blob")
        if self.same_sign and not (
            all(a > 0 for a in self.intensities) or all(a < 0 for a in self.intensities)
        ):
            raise ValueError("same_sign blobs need intensities of one sign")
        if self.d0 is None:
            if len(self.centers) == 1:
                raise ValueError("d0 must be given for a single blob")
            self.d0 = min_pairwise_distance(np.array(self.centers))[0]
        return self

    def with_eps(self, eps: float) -> "BlobSpec":
        return self.model_copy(update={"eps": eps})

    @property
    def radius(self) -> float:
        """Support radius d0 * eps / 2."""
        return self.d0 * self.eps / 2.0

    @property
    def c1(self) -> float:
        """Supports lie in B(x_i, C1 eps)."""
        return self.d0 / 2.0

    @property
    def c2(self) -> float:
        """0 <= theta_i <= C2 |a_i| eps^-2."""
        return 4.0 * CHI_SUP / (self.d0 * self.d0 * chi_l1_norm())

    @property
    def support_gap(self) -> float:
        """min_{i<j} dist(supp theta_i, supp theta_j)."""
        if len(self.centers) < 2:
            return math.inf
        return min_pairwise_distance(np.array(self.centers))[0] - 2.0 * self.radius


def resolve_grid(
    eps: float, d0: float, length: float = 2.0 * math.pi, max_n: Optional[int] = None
) -> Grid:
    """Smallest power-of-two grid with dx <= eps d0 / 8."""
    max_n = max_n or settings.max_grid_n
    target = eps * d0 / MIN_POINTS_ACROSS
    n = 16
    while length / n > target:
        n *= 2
    if n > max_n:
        raise ResolutionError(
            f"eps={eps} needs n={n} to put {MIN_POINTS_ACROSS} points across the blob, "
            f"above the cap max_grid_n={max_n}"
        )
    return Grid(n, length)


def free_coordinates(grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """Grid coordinates relative to the box center."""
    x1, x2 = grid.mesh()
    cx, cy = grid.center
    return x1 - cx, x2 - cy


def check_inside_central_box(
    grid: Grid, center: Tuple[float, float], radius: float, fraction: Optional[float] = None
) -> None:
    lo, hi = grid.central_box(fraction)
    half = (hi[0] - lo[0]) / 2.0
    reach = max(abs(center[0]), abs(center[1])) + radius
    if reach > half:
        raise CutoffSupportError(
            f"support of radius {radius:.6g} around ({center[0]:.6g}, {center[1]:.6g}) leaves "
            f"the central sub-box of half-width {half:.6g}"
        )


def single_blob(grid: Grid, center: Tuple[float, float], intensity: float, core: float) -> np.ndarray:
    """4 a / (core^2 ||chi||_1) chi(2 (x - x_i) / core), core = d0 eps."""
    y1, y2 = free_coordinates(grid)
    r2 = ((y1 - center[0]) ** 2 + (y2 - center[1]) ** 2) * (2.0 / core) ** 2
    return 4.0 * intensity / (core * core * chi_l1_norm()) * bump_chi(r2)


def make_blob_initial_data(
    spec: BlobSpec, grid: Grid, box_fraction: Optional[float] = None
) -> ScalarField:
    """Sum of the blobs sampled on ``grid``, each rescaled so its quadrature mass is a_i.

    Raises:
        ResolutionError: fewer than 8 grid points across a blob
        SupportOverlapError: two supports touch or overlap
        CutoffSupportError: a support leaves the central sub-box
    """
    core = spec.d0 * spec.eps
    points = core / grid.dx
    if points < MIN_POINTS_ACROSS:
        raise ResolutionError(
            f"blob core {core:.6g} spans {points:.2f} grid points; {MIN_POINTS_ACROSS} needed"
        )
    if spec.support_gap <= 0.0:
        raise SupportOverlapError(f"blob supports overlap (gap {spec.support_gap:.6g})")

    total = np.zeros((grid.n, grid.n))
    for center, a in zip(spec.centers, spec.intensities):
        check_inside_central_box(grid, center, spec.radius, box_fraction)
        blob = single_blob(grid, center, a, core)
        mass = float(np.sum(blob) * grid.cell_area)
        total += blob * (a / mass)
        logger.debug(f"Blob at {center}: raw mass {mass:.12g}, target {a:.12g}")
    return ScalarField(grid, values=total)
