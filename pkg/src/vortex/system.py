"""The gSQG point vortex system: state, velocity field and conserved quantities."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import AdmissibilityError, CoincidentVorticesError
from src.kernels.green import (
    AlphaParam,
    as_alpha,
    biot_savart_alpha,
    biot_savart_regularized,
    green_alpha,
    green_regularized,
)
from src.vortex.summation import compensated_sum

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VortexSystem:
    """N point vortices with nonzero intensities at pairwise distinct positions."""

    intensities: np.ndarray
    positions: np.ndarray
    alpha: AlphaParam

    def __init__(
        self,
        intensities: Sequence[float],
        positions: Sequence[Sequence[float]],
        alpha: Union[AlphaParam, float] = 0.0,
    ):
        a = np.array(intensities, dtype=float).reshape(-1)
        x = np.array(positions, dtype=float).reshape(-1, 2)
        if a.size < 1:
            raise ValueError("a vortex system needs at least one vortex")
        if a.size != x.shape[0]:
            raise ValueError(f"{a.size} intensities but {x.shape[0]} positions")
        if np.any(a == 0.0) or not np.all(np.isfinite(a)):
            raise ValueError("intensities must be finite and nonzero")
        a.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "intensities", a)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "alpha", as_alpha(alpha))
        distance, pair = min_pairwise_distance(x)
        if distance == 0.0:
            raise CoincidentVorticesError(pair)

    @property
    def n(self) -> int:
        return self.intensities.size

    def with_positions(self, positions: np.ndarray) -> "VortexSystem":
        return VortexSystem(self.intensities, positions, self.alpha)

    def reversed(self) -> "VortexSystem":
        """Same positions with negated intensities, i.e. the time-reversed flow."""
        return VortexSystem(-self.intensities, self.positions, self.alpha)

    def mirrored(self) -> "VortexSystem":
        """Reflection x2 -> -x2; its forward flow is the time-reversed flow of ``self``."""
        return VortexSystem(self.intensities, self.positions * np.array([1.0, -1.0]), self.alpha)

    def permuted(self, order: Sequence[int]) -> "VortexSystem":
        order = list(order)
        return VortexSystem(self.intensities[order], self.positions[order], self.alpha)

    @property
    def same_sign(self) -> bool:
        return bool(np.all(self.intensities > 0.0) or np.all(self.intensities < 0.0))


def min_pairwise_distance(positions: np.ndarray) -> Tuple[float, Tuple[int, int]]:
    """Smallest |x_i - x_j| over i < j and the first pair (in ascending order) attaining it."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = positions.shape[0]
    if n < 2:
        return math.inf, (0, 0)
    i_idx, j_idx = np.triu_indices(n, k=1)
    diff = positions[i_idx] - positions[j_idx]
    dist = np.sqrt(diff[:, 0] * diff[:, 0] + diff[:, 1] * diff[:, 1])
    best = int(np.argmin(dist))
    return float(dist[best]), (int(i_idx[best]), int(j_idx[best]))


def min_separation(sys: VortexSystem) -> Tuple[float, Tuple[int, int]]:
    return min_pairwise_distance(sys.positions)


def _pair_differences(positions: np.ndarray, strict: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """z[i, j] = x_i - x_j, plus a mask of the entries that must not contribute.

    The diagonal (and, when ``strict`` is off, any coincident pair) is replaced by a
    harmless placeholder so the kernels can be evaluated without special cases.
    """
    z = positions[:, None, :] - positions[None, :, :]
    r2 = z[..., 0] * z[..., 0] + z[..., 1] * z[..., 1]
    excluded = np.eye(positions.shape[0], dtype=bool)
    coincident = (r2 == 0.0) & ~excluded
    if np.any(coincident):
        if strict:
            i, j = np.argwhere(coincident)[0]
            raise CoincidentVorticesError((int(min(i, j)), int(max(i, j))))
        excluded = excluded | coincident
    z[excluded] = (1.0, 0.0)
    return z, excluded


def velocities(
    positions: np.ndarray,
    intensities: np.ndarray,
    alpha: AlphaParam,
    eps_reg: Optional[float] = None,
) -> np.ndarray:
    """Velocity of every vortex, sum_{j != i} a_j K_alpha(x_i - x_j), summed over ascending j."""
    n = intensities.size
    if n == 1:
        return np.zeros((1, 2))
    # the regularized kernel vanishes at the origin, so coincident points are allowed there
    z, excluded = _pair_differences(positions, strict=eps_reg is None)
    if eps_reg is None:
        kernel = biot_savart_alpha(alpha, z)
    else:
        kernel = biot_savart_regularized(alpha, eps_reg, z)
    contributions = intensities[None, :, None] * kernel
    contributions[excluded] = 0.0
    return compensated_sum(contributions, axis=1)


def rhs(sys: VortexSystem, eps_reg: Optional[float] = None) -> np.ndarray:
    """Right-hand side of the point vortex ODE, shape (N, 2)."""
    return velocities(sys.positions, sys.intensities, sys.alpha, eps_reg)


def hamiltonian_of(
    positions: np.ndarray,
    intensities: np.ndarray,
    alpha: AlphaParam,
    eps_reg: Optional[float] = None,
) -> float:
    n = intensities.size
    if n == 1:
        return 0.0
    z, excluded = _pair_differences(positions, strict=eps_reg is None)
    if eps_reg is None:
        green = green_alpha(alpha, z)
    else:
        green = green_regularized(alpha, eps_reg, z)
    terms = intensities[:, None] * intensities[None, :] * green
    terms[excluded & ~np.eye(n, dtype=bool)] = 0.0
    off_diagonal = terms[~np.eye(n, dtype=bool)]
    return 0.5 * float(compensated_sum(off_diagonal))


def hamiltonian(sys: VortexSystem, eps_reg: Optional[float] = None) -> float:
    """H_alpha = 1/2 sum_{i != j} a_i a_j G_alpha(x_i - x_j)."""
    return hamiltonian_of(sys.positions, sys.intensities, sys.alpha, eps_reg)


def center_of_vorticity(sys: VortexSystem) -> np.ndarray:
    """M = sum a_i x_i (proportional to the center of vorticity when sum a_i != 0)."""
    return compensated_sum(sys.intensities[:, None] * sys.positions, axis=0)


def moment_of_inertia(sys: VortexSystem) -> float:
    """I = sum a_i |x_i|^2."""
    x = sys.positions
    return float(compensated_sum(sys.intensities * (x[:, 0] * x[:, 0] + x[:, 1] * x[:, 1])))


def separation_lower_bound_same_sign(sys: VortexSystem) -> float:
    """(C_alpha min_{i != j} a_i a_j / H_alpha)^{1/alpha}, a bound on all future separations.

    Requires alpha > 0 and intensities of one sign; then H_alpha is conserved and
    dominates every pair term.
    """
    if sys.alpha.is_log:
        raise AdmissibilityError("the same-sign separation bound needs alpha > 0")
    if not sys.same_sign:
        raise AdmissibilityError("the same-sign separation bound needs intensities of one sign")
    if sys.n < 2:
        return math.inf
    a = sys.intensities
    products = a[:, None] * a[None, :]
    min_product = float(np.min(products[~np.eye(sys.n, dtype=bool)]))
    return (sys.alpha.c_alpha * min_product / hamiltonian(sys)) ** (1.0 / sys.alpha.alpha)


def collapse_example(alpha: Union[AlphaParam, float] = 0.0) -> VortexSystem:
    """Three vortices a = (2, 2, -1) on a self-similar spiral through a point.

    With K_alpha = grad_perp G_alpha a positive vortex turns its neighbours clockwise, so at
    alpha = 0 this configuration spirals outwards as t grows and collapses in backward time. Use
    :func:`collapsing_example` for the forward-collapsing image.
    """
    return VortexSystem(
        intensities=[2.0, 2.0, -1.0],
        positions=[[-1.0, 0.0], [1.0, 0.0], [1.0, math.sqrt(2.0)]],
        alpha=alpha,
    )


def collapsing_example(alpha: Union[AlphaParam, float] = 0.0) -> VortexSystem:
    """Mirror image of :func:`collapse_example`, which collapses forward in time."""
    return collapse_example(alpha).mirrored()


def _kernel_speed(alpha: AlphaParam, distance: float) -> float:
    return float(np.linalg.norm(biot_savart_alpha(alpha, np.array([distance, 0.0]))))


def rotation_period(sys: VortexSystem) -> float:
    """Period 2 pi d / (|a1 + a2| |K_alpha|(d)) of a rotating pair."""
    if sys.n != 2:
        raise ValueError("rotation period is defined for two vortices")
    total = float(np.sum(sys.intensities))
    if total == 0.0:
        return math.inf
    d = float(np.linalg.norm(sys.positions[0] - sys.positions[1]))
    return 2.0 * math.pi * d / (abs(total) * _kernel_speed(sys.alpha, d))


def two_vortex_solution(sys: VortexSystem, t: float) -> np.ndarray:
    """Closed-form positions of a pair at time t.

    With a1 + a2 != 0 the pair rotates rigidly about M / (a1 + a2) with angular velocity
    (a1 + a2) f(d), where K_alpha(z) = f(|z|) z_perp; otherwise it translates with the
    common velocity a2 K_alpha(x1 - x2).
    """
    if sys.n != 2:
        raise ValueError("closed-form solution is defined for two vortices")
    a1, a2 = sys.intensities
    x = sys.positions
    total = a1 + a2
    if total == 0.0:
        drift = a2 * biot_savart_alpha(sys.alpha, x[0] - x[1])
        return x + t * drift
    d = float(np.linalg.norm(x[0] - x[1]))
    speed_factor = -_kernel_speed(sys.alpha, d) / d
    omega = total * speed_factor
    c, s = math.cos(omega * t), math.sin(omega * t)
    rotation = np.array([[c, -s], [s, c]])
    center = center_of_vorticity(sys) / total
    return center + (x - center) @ rotation.T


def pairwise_distance_ratios(positions: np.ndarray) -> Tuple[float, float]:
    """(d12 / d13, d23 / d13) for a three-vortex configuration."""
    x = np.asarray(positions, dtype=float).reshape(-1, 2)
    if x.shape[0] != 3:
        raise ValueError("distance ratios are defined for three vortices")
    d12 = np.linalg.norm(x[0] - x[1])
    d13 = np.linalg.norm(x[0] - x[2])
    d23 = np.linalg.norm(x[1] - x[2])
    return float(d12 / d13), float(d23 / d13)


def periodic_image_mismatch(sys: VortexSystem, period: float, images: int = 2) -> Dict[str, float]:
    """Velocity induced at each vortex by its periodic images, relative to the free-space rhs.

    The lattice sum is truncated to |m|_inf <= images and is only a measurement of how far
    the free-space model is from a periodic one; no periodic kernel is defined from it.
    """
    shifts = [
        (m1 * period, m2 * period)
        for m1 in range(-images, images + 1)
        for m2 in range(-images, images + 1)
        if (m1, m2) != (0, 0)
    ]
    shifts = np.array(shifts)
    z = sys.positions[:, None, None, :] - sys.positions[None, :, None, :] - shifts[None, None, :, :]
    kernel = biot_savart_alpha(sys.alpha, z)
    image_velocity = np.einsum("j,ijmk->ik", sys.intensities, kernel)
    absolute = float(np.max(np.linalg.norm(image_velocity, axis=1)))
    scale = float(np.max(np.linalg.norm(rhs(sys), axis=1))) if sys.n > 1 else 0.0
    relative = absolute / scale if scale > 0.0 else math.inf if absolute > 0.0 else 0.0
    return {"absolute": absolute, "relative": relative}
