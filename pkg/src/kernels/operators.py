"""Grid operators built on the kernels: Riesz potential, fractional Laplacian, limit checks."""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from src.errors import KernelDomainError
from src.kernels.green import DissipationParam, c_alpha, green_alpha
from src.kernels.symbols import fractional_symbol, riesz_symbol
from src.spectral.field import ScalarField, ifft2

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RieszBoundCheck:
    lhs: float
    rhs: float
    ratio: float


@dataclass(frozen=True)
class LogLimitCheck:
    lhs: float
    rhs: float
    abs_error: float


@lru_cache(maxsize=64)
def cell_mean_of_riesz_kernel(s: float, length: float) -> float:
    """Average over the square [-L/2, L/2]^2 of the free-space Riesz kernel c_s |x|^{s-2}.

    In polar coordinates the square splits into 8 triangles, giving
    8/s (L/2)^s int_0^{pi/4} sec(phi)^s dphi.
    """
    angular, _ = quad(lambda phi: math.cos(phi) ** (-s), 0.0, math.pi / 4.0)
    integral = 8.0 / s * (length / 2.0) ** s * angular
    return c_alpha(2.0 - s) * integral / (length * length)


def riesz_potential(s: float, f: ScalarField) -> np.ndarray:
    """I_s f on the torus.

    The k = 0 mode of |k|^{-s} is dropped, so the mean of f is removed before applying
    the symbol and its contribution (mass times the cell mean of the kernel) is added back.
    """
    if not (0.0 < s < 2.0):
        raise KernelDomainError(f"Riesz order s must lie in (0, 2), got {s}")
    k1, k2 = f.grid.wavevectors()
    periodic = ifft2(riesz_symbol(s, k1, k2) * f.spectral).real
    mass = f.integral()
    return periodic + mass * cell_mean_of_riesz_kernel(s, f.grid.length)


def riesz_potential_bound_check(s: float, p: float, f: ScalarField) -> RieszBoundCheck:
    """Compare sup |I_s f| with ||f||_1^{1-beta} ||f||_p^beta, beta = (2-s) / (2 (1 - 1/p))."""
    if not (0.0 < s < 2.0):
        raise KernelDomainError(f"Riesz order s must lie in (0, 2), got {s}")
    if not p > 2.0 / s:
        raise KernelDomainError(f"p must exceed 2/s = {2.0 / s:.6g}, got {p}")

    values = f.values
    if np.any(values > 0.0) and np.any(values < 0.0):
        raise KernelDomainError("Riesz potential bound requires a sign-definite field")

    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    beta = (2.0 - s) / (2.0 * (1.0 - inv_p))

    lhs = float(np.max(np.abs(riesz_potential(s, f))))
    l1 = f.lp_norm(1.0)
    lp = f.lp_norm(p)
    rhs = 0.0 if l1 == 0.0 else l1 ** (1.0 - beta) * lp**beta
    ratio = 0.0 if rhs == 0.0 else lhs / rhs
    return RieszBoundCheck(lhs=lhs, rhs=rhs, ratio=ratio)


def fractional_laplacian(d: DissipationParam, f: ScalarField) -> ScalarField:
    """(-Delta)^{gamma/2} f through its Fourier symbol |k|^gamma."""
    k1, k2 = f.grid.wavevectors()
    return ScalarField(f.grid, spectral=fractional_symbol(d, k1, k2) * f.spectral)


def log_limit_check(f: ScalarField, alpha: float) -> LogLimitCheck:
    """Quadrature of int G_alpha f against int G_0 f for the mean-zero part of f.

    The evaluation point is offset by half a cell from the grid centre so no sample hits
    the singularity; both sides use the same nodes, so the gap closes as alpha -> 0+.
    """
    grid = f.grid
    x1, x2 = grid.mesh()
    origin = grid.center + 0.5 * grid.dx
    z = np.stack([x1 - origin[0], x2 - origin[1]], axis=-1)
    f0 = f.values - np.mean(f.values)

    lhs = float(np.sum(green_alpha(alpha, z) * f0) * grid.cell_area)
    rhs = float(np.sum(green_alpha(0.0, z) * f0) * grid.cell_area)
    return LogLimitCheck(lhs=lhs, rhs=rhs, abs_error=abs(lhs - rhs))
