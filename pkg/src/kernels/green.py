"""Green's function G_alpha, Biot-Savart kernel K_alpha and their regularizations.

All kernels are vectorized over a trailing axis of length 2: ``z`` may be a single
2-vector or an array of shape ``(..., 2)``. The alpha = 0 (Euler) branch uses the
logarithmic potential and is a separate code path, never a limit.
"""

import logging
import math
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.special import gammaln

from src.errors import KernelDomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, tuple, list]


class AlphaParam(BaseModel):
    """Order of the gSQG Biot-Savart law, 0 <= alpha < 2."""

    model_config = ConfigDict(frozen=True)

    alpha: float

    @field_validator("alpha")
    @classmethod
    def _check_range(cls, value: float) -> float:
        if not (0.0 <= value < 2.0) or not math.isfinite(value):
            raise ValueError(f"alpha must lie in [0, 2), got {value}")
        return value

    @property
    def is_log(self) -> bool:
        return self.alpha == 0.0

    @property
    def c_alpha(self) -> float:
        """C_alpha; only defined away from the logarithmic branch."""
        return c_alpha(self.alpha)


class DissipationParam(BaseModel):
    """Fractional dissipation kappa (-Delta)^{gamma/2}.

    kappa = 0 is the inviscid branch, in which case gamma is ignored.
    """

    model_config = ConfigDict(frozen=True)

    gamma: float = 2.0
    kappa: float = 0.0

    @field_validator("gamma")
    @classmethod
    def _check_gamma(cls, value: float) -> float:
        if not (0.0 <= value <= 2.0):
            raise ValueError(f"gamma must lie in [0, 2], got {value}")
        return value

    @field_validator("kappa")
    @classmethod
    def _check_kappa(cls, value: float) -> float:
        if value < 0.0 or not math.isfinite(value):
            raise ValueError(f"kappa must be a finite nonnegative number, got {value}")
        return value

    @model_validator(mode="after")
    def _log_inviscid(self) -> "DissipationParam":
        if self.kappa == 0.0 and self.gamma != 2.0:
            logger.debug(f"kappa = 0: gamma = {self.gamma} is ignored")
        return self

    @property
    def inviscid(self) -> bool:
        return self.kappa == 0.0


def as_alpha(p: Union[AlphaParam, float]) -> AlphaParam:
    """Accept either an AlphaParam or a bare float."""
    if isinstance(p, AlphaParam):
        return p
    try:
        return AlphaParam(alpha=float(p))
    except ValueError as e:
        raise KernelDomainError(str(e)) from e


def c_alpha(alpha: float) -> float:
    """C_alpha = Gamma(alpha/2) / (2^{2-alpha} pi Gamma((2-alpha)/2)) for alpha in (0, 2).

    Evaluated through log-Gamma so that it stays accurate as alpha approaches either end.
    """
    if not (0.0 < alpha < 2.0):
        raise KernelDomainError(f"C_alpha is defined for alpha in (0, 2), got {alpha}")
    log_c = (
        gammaln(alpha / 2.0)
        - gammaln((2.0 - alpha) / 2.0)
        - (2.0 - alpha) * math.log(2.0)
        - math.log(math.pi)
    )
    return float(np.exp(log_c))


def mollifier(r: ArrayLike) -> np.ndarray:
    """Smooth cutoff psi(r): 1 on [0, 1], exp(1 - 1/(1 - (r-1)^2)) on (1, 2), 0 beyond."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    out[r <= 1.0] = 1.0
    mid = (r > 1.0) & (r < 2.0)
    s = r[mid] - 1.0
    out[mid] = np.exp(1.0 - 1.0 / (1.0 - s * s))
    return out


def mollifier_derivative(r: ArrayLike) -> np.ndarray:
    """psi'(r), supported on (1, 2)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    mid = (r > 1.0) & (r < 2.0)
    s = r[mid] - 1.0
    one_minus = 1.0 - s * s
    out[mid] = np.exp(1.0 - 1.0 / one_minus) * (-2.0 * s / (one_minus * one_minus))
    return out


def _as_vectors(z: ArrayLike) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1:] != (2,):
        raise KernelDomainError(f"expected 2-vectors, got array of shape {z.shape}")
    return z


def _perp(z: np.ndarray) -> np.ndarray:
    return np.stack([-z[..., 1], z[..., 0]], axis=-1)


def _squared_norm(z: np.ndarray) -> np.ndarray:
    return z[..., 0] * z[..., 0] + z[..., 1] * z[..., 1]


def _green_from_r2(p: AlphaParam, r2: np.ndarray) -> np.ndarray:
    if p.is_log:
        return -np.log(r2) / (4.0 * math.pi)
    return p.c_alpha * r2 ** (-p.alpha / 2.0)


def _kernel_factor(p: AlphaParam, r2: np.ndarray) -> np.ndarray:
    """Scalar f(|z|) with K_alpha(z) = f(|z|) z_perp."""
    if p.is_log:
        return -1.0 / (2.0 * math.pi * r2)
    return -p.alpha * p.c_alpha * r2 ** (-(2.0 + p.alpha) / 2.0)


def green_alpha(p: Union[AlphaParam, float], z: ArrayLike) -> Union[float, np.ndarray]:
    """G_alpha(z) = C_alpha |z|^{-alpha}, or -(1/2pi) ln|z| when alpha = 0."""
    p = as_alpha(p)
    z = _as_vectors(z)
    r2 = _squared_norm(z)
    if np.any(r2 == 0.0):
        raise KernelDomainError("G_alpha is singular at z = 0")
    out = _green_from_r2(p, r2)
    return float(out) if out.ndim == 0 else out


def biot_savart_alpha(p: Union[AlphaParam, float], z: ArrayLike) -> np.ndarray:
    """K_alpha(z) = grad_perp G_alpha(z) = -alpha C_alpha z_perp / |z|^{2+alpha}.

    For alpha = 0 this is -(1/2pi) z_perp / |z|^2. z_perp = (-z2, z1).
    """
    p = as_alpha(p)
    z = _as_vectors(z)
    r2 = _squared_norm(z)
    if np.any(r2 == 0.0):
        raise KernelDomainError("K_alpha is singular at z = 0")
    return _kernel_factor(p, r2)[..., None] * _perp(z)


def green_regularized(
    p: Union[AlphaParam, float], eps_reg: float, z: ArrayLike
) -> Union[float, np.ndarray]:
    """G_{alpha,eps}(z) = G_alpha(z) (1 - psi(|z|^2 / eps^2)); zero on |z| <= eps."""
    p = as_alpha(p)
    if not eps_reg > 0.0:
        raise KernelDomainError(f"eps_reg must be positive, got {eps_reg}")
    z = _as_vectors(z)
    r2 = _squared_norm(z)
    rho = r2 / (eps_reg * eps_reg)
    out = np.zeros_like(r2)
    live = rho > 1.0
    out[live] = _green_from_r2(p, r2[live]) * (1.0 - mollifier(rho[live]))
    return float(out) if out.ndim == 0 else out


def biot_savart_regularized(p: Union[AlphaParam, float], eps_reg: float, z: ArrayLike) -> np.ndarray:
    """grad_perp of the regularized Green's function.

    Exactly K_alpha once |z|^2 >= 2 eps^2, exactly zero on |z| <= eps, and globally
    Lipschitz in between:

        K_{alpha,eps}(z) = (1 - psi) K_alpha(z) - G_alpha(z) psi'(|z|^2/eps^2) 2 z_perp / eps^2
    """
    p = as_alpha(p)
    if not eps_reg > 0.0:
        raise KernelDomainError(f"eps_reg must be positive, got {eps_reg}")
    z = _as_vectors(z)
    r2 = _squared_norm(z)
    rho = r2 / (eps_reg * eps_reg)

    factor = np.zeros_like(r2)
    outer = rho >= 2.0
    factor[outer] = _kernel_factor(p, r2[outer])

    band = (rho > 1.0) & (rho < 2.0)
    if np.any(band):
        r2_band = r2[band]
        rho_band = rho[band]
        factor[band] = (1.0 - mollifier(rho_band)) * _kernel_factor(p, r2_band) - _green_from_r2(
            p, r2_band
        ) * mollifier_derivative(rho_band) * 2.0 / (eps_reg * eps_reg)

    return factor[..., None] * _perp(z)
