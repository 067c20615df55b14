"""Concentration diagnostics of a scalar field about a set of vortex positions.

Distances are taken in free-space coordinates (origin at the box center, no periodic wrap)
and every cutoff support must stay inside the central sub-box. Integrals against the
cutoffs are evaluated on a local patch around each vortex: the grid nodes themselves when
the grid puts at least 8 points across the cutoff core, otherwise a finer patch on which the
field is sampled through its trigonometric interpolant. Whole-box integrals use the grid.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.errors import AdmissibilityError
from src.kernels.green import mollifier
from src.localization.blobs import MIN_POINTS_ACROSS, bump_chi, check_inside_central_box, free_coordinates
from src.spectral.field import ScalarField

logger = logging.getLogger(__name__)

TestFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

# Bump this whenever DEFAULT_TEST_FUNCTIONS changes; it is written into every report.
TEST_SET_VERSION = 1

# Refined patch spacing is R / POINTS_PER_RADIUS.
POINTS_PER_RADIUS = 16


def _bump_test(x1, x2):
    return bump_chi(x1 * x1 + x2 * x2)


DEFAULT_TEST_FUNCTIONS: Dict[str, TestFunction] = {
    "one": lambda x1, x2: np.ones(np.broadcast(x1, x2).shape),
    "x1": lambda x1, x2: x1,
    "x2": lambda x1, x2: x2,
    "sin_x1": lambda x1, x2: np.sin(x1),
    "cos_x1": lambda x1, x2: np.cos(x1),
    "sin_x2": lambda x1, x2: np.sin(x2),
    "cos_x2": lambda x1, x2: np.cos(x2),
    "cos_x1_plus_x2": lambda x1, x2: np.cos(x1 + x2),
    "bump": _bump_test,
}


def cutoff_phi(r: np.ndarray) -> np.ndarray:
    """phi(|x|): 1 on [0, 1], exp(1 - 1/(1 - (r-1)^2)) on (1, 2), 0 beyond."""
    return mollifier(r)


class CutoffSpec(BaseModel):
    """Cutoff radius R; phi_R(x) = phi(|x| / R) is supported in B(0, 2R).

    Admissibility R <= d_T / 100 needs the minimum separation over the run, so it is
    checked by :meth:`check_admissible` once the ODE trajectory is known.
    """

    R: float = Field(gt=0.0)
    admissibility_factor: float = Field(default=100.0, gt=0.0)

    def check_admissible(self, d_t: float) -> None:
        limit = d_t / self.admissibility_factor
        if self.R > limit * (1.0 + 1e-12):
            raise AdmissibilityError(
                f"cutoff radius R={self.R:.6g} exceeds d_T/{self.admissibility_factor:g} = {limit:.6g}"
            )

    def scaled(self, factor: float) -> "CutoffSpec":
        return self.model_copy(update={"R": self.R * factor})


@dataclass(frozen=True)
class LocalPatch:
    """Samples of a field on a square patch around one vortex.

    ``y1``/``y2`` are offsets from the vortex; every integral is a rectangle rule with
    ``cell_area`` per sample.
    """

    y1: np.ndarray
    y2: np.ndarray
    values: np.ndarray
    cell_area: float
    refined: bool

    @property
    def r(self) -> np.ndarray:
        return np.hypot(self.y1, self.y2)

    def integral(self, weight: np.ndarray) -> float:
        return float(np.sum(weight * self.values) * self.cell_area)


def _node_range(lo: float, hi: float, dx: float) -> np.ndarray:
    return np.arange(math.ceil(lo / dx - 1e-12), math.floor(hi / dx + 1e-12) + 1)


def local_patch(
    theta: ScalarField,
    center: Sequence[float],
    R: float,
    box_fraction: Optional[float] = None,
) -> LocalPatch:
    """The patch covering B(center, 2R), the support of phi_R around ``center``.

    Raises:
        CutoffSupportError: the support leaves the central sub-box
    """
    grid = theta.grid
    reach = 2.0 * R
    check_inside_central_box(grid, center, reach, box_fraction)
    c1, c2 = grid.center[0] + center[0], grid.center[1] + center[1]

    if 2.0 * R >= MIN_POINTS_ACROSS * grid.dx:
        cols = _node_range(c1 - reach, c1 + reach, grid.dx)
        rows = _node_range(c2 - reach, c2 + reach, grid.dx)
        values = theta.values[np.ix_(rows % grid.n, cols % grid.n)]
        y1, y2 = np.meshgrid(cols * grid.dx - c1, rows * grid.dx - c2, indexing="xy")
        return LocalPatch(y1, y2, values, grid.cell_area, refined=False)

    h = R / POINTS_PER_RADIUS
    offsets = np.arange(-2 * POINTS_PER_RADIUS, 2 * POINTS_PER_RADIUS + 1) * h
    values = theta.interpolate(c1 + offsets, c2 + offsets)
    y1, y2 = np.meshgrid(offsets, offsets, indexing="xy")
    return LocalPatch(y1, y2, values, h * h, refined=True)


def _patches(theta, positions, R, box_fraction):
    return [local_patch(theta, center, R, box_fraction) for center in _positions(positions)]


def _positions(positions) -> np.ndarray:
    return np.asarray(positions, dtype=float).reshape(-1, 2)


def approximate_moment_of_inertia(
    theta: ScalarField,
    vortex_positions,
    cutoff: CutoffSpec,
    box_fraction: Optional[float] = None,
) -> float:
    """I_R = sum_i int |x - x_i|^2 phi_R(x - x_i) theta dx."""
    total = 0.0
    for patch in _patches(theta, vortex_positions, cutoff.R, box_fraction):
        r = patch.r
        total += patch.integral(r * r * cutoff_phi(r / cutoff.R))
    return total


def running_max(series: Sequence[float]) -> np.ndarray:
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        raise ValueError("running_max needs a nonempty series")
    return np.maximum.accumulate(series)


def mu_concentration(
    theta: ScalarField,
    positions,
    cutoff: CutoffSpec,
    reading: str = "union",
    box_fraction: Optional[float] = None,
) -> float:
    """Mass outside the R/4-cores of the vortices.

    ``union``: int (1 - sum_j phi(4 (x - x_j) / R)) theta, which vanishes when theta lives
    in the union of the cores. ``per_vortex``: sum_j int (1 - phi(4 (x - x_j) / R)) theta.
    """
    if reading not in ("union", "per_vortex"):
        raise ValueError(f"unknown reading {reading!r}; expected 'union' or 'per_vortex'")
    total = theta.integral()
    cores = [
        patch.integral(cutoff_phi(4.0 * patch.r / cutoff.R))
        for patch in _patches(theta, positions, cutoff.R, box_fraction)
    ]
    if reading == "union":
        return total - sum(cores)
    return float(sum(total - core for core in cores))


def tilde_mu(
    theta: ScalarField,
    positions,
    intensities: Sequence[float],
    cutoff: CutoffSpec,
    box_fraction: Optional[float] = None,
) -> float:
    """sum_j |a_j - int phi_R(x - x_j) theta|."""
    patches = _patches(theta, positions, cutoff.R, box_fraction)
    return float(
        sum(abs(a - p.integral(cutoff_phi(p.r / cutoff.R))) for p, a in zip(patches, intensities))
    )


def weak_star_errors(
    theta: ScalarField,
    positions,
    intensities: Sequence[float],
    test_fns: Optional[Dict[str, TestFunction]] = None,
) -> Dict[str, float]:
    """|int theta f - sum_i a_i f(x_i)| for every named test function."""
    test_fns = DEFAULT_TEST_FUNCTIONS if test_fns is None else test_fns
    x = _positions(positions)
    a = np.asarray(intensities, dtype=float)
    y1, y2 = free_coordinates(theta.grid)
    errors = {}
    for name, f in test_fns.items():
        field_part = theta.integral(np.broadcast_to(f(y1, y2), y1.shape))
        point_part = float(np.sum(a * np.asarray(f(x[:, 0], x[:, 1]), dtype=float)))
        errors[name] = abs(field_part - point_part)
    return errors


def weak_star_error(
    theta: ScalarField,
    positions,
    intensities: Sequence[float],
    test_fns: Optional[Dict[str, TestFunction]] = None,
) -> float:
    """Max over the test set of |int theta f - sum_i a_i f(x_i)|."""
    return max(weak_star_errors(theta, positions, intensities, test_fns).values())


@dataclass(frozen=True)
class ChebyshevCheck:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-15


def chebyshev_check(
    theta: ScalarField,
    positions,
    cutoff: CutoffSpec,
    r: float,
    box_fraction: Optional[float] = None,
) -> ChebyshevCheck:
    """sum_i int_{r <= |x - x_i| <= R} phi_R theta  <=  I_R / r^2, valid for theta >= 0."""
    if not (0.0 < r < cutoff.R):
        raise ValueError(f"r must lie in (0, R), got {r}")
    lhs = 0.0
    for patch in _patches(theta, positions, cutoff.R, box_fraction):
        dist = patch.r
        ring = (dist >= r) & (dist <= cutoff.R)
        lhs += patch.integral(cutoff_phi(dist / cutoff.R) * ring)
    rhs = approximate_moment_of_inertia(theta, positions, cutoff, box_fraction) / (r * r)
    return ChebyshevCheck(lhs=lhs, rhs=rhs)


def partition_defect(
    theta: ScalarField, positions, cutoff: CutoffSpec, box_fraction: Optional[float] = None
) -> float:
    """| sum_i int phi_R(x - x_i) theta + int psi_R theta - int theta |, psi_R = 1 - sum_j phi_R."""
    localized = sum(
        patch.integral(cutoff_phi(patch.r / cutoff.R))
        for patch in _patches(theta, positions, cutoff.R, box_fraction)
    )
    total = theta.integral()
    remainder = total - localized
    return abs(localized + remainder - total)


@dataclass(frozen=True)
class MassDefect:
    inside: np.ndarray
    outside: np.ndarray

    @property
    def max_inside(self) -> float:
        return float(np.max(self.inside))


def mass_defect(
    theta: ScalarField,
    positions,
    intensities: Sequence[float],
    R: float,
    box_fraction: Optional[float] = None,
) -> MassDefect:
    """Per vortex |a_i - int_{|x - x_i| <= R} theta| and |int_{|x - x_i| > R} theta| over the
    part of the box closer to x_i than to any other vortex."""
    x = _positions(positions)
    grid = theta.grid
    y1, y2 = free_coordinates(grid)
    nearest = np.argmin(np.stack([(y1 - c[0]) ** 2 + (y2 - c[1]) ** 2 for c in x]), axis=0)
    inside = np.empty(len(x))
    outside = np.empty(len(x))
    for i, (patch, a) in enumerate(zip(_patches(theta, x, R, box_fraction), intensities)):
        ball = patch.integral((patch.r <= R).astype(float))
        inside[i] = abs(a - ball)
        outside[i] = abs(theta.integral((nearest == i).astype(float)) - ball)
    return MassDefect(inside=inside, outside=outside)


def initial_moment_bound(c1: float, eps: float, intensities: Sequence[float]) -> float:
    """C1^2 eps^2 ||a||_1, the bound on I_R at t = 0 for blob data."""
    return c1 * c1 * eps * eps * float(np.sum(np.abs(intensities)))
