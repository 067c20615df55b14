"""Fourier symbols of the fractional Laplacian, the Riesz potential and the velocity map.

Wavevectors may be single 2-vectors or broadcastable coordinate arrays ``(kx, ky)``.
The convention is f_hat(k) = sum f(x) exp(-i k.x), so d/dx_j has symbol i k_j.
"""

from typing import Tuple, Union

import numpy as np

from src.kernels.green import AlphaParam, DissipationParam, as_alpha

ArrayOrFloat = Union[float, np.ndarray]


def _norm(kx: ArrayOrFloat, ky: ArrayOrFloat) -> np.ndarray:
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    return np.sqrt(kx * kx + ky * ky)


def _power_away_from_zero(k: np.ndarray, exponent: float) -> np.ndarray:
    out = np.zeros_like(k)
    nz = k > 0.0
    out[nz] = k[nz] ** exponent
    return out


def fractional_symbol(d: DissipationParam, kx: ArrayOrFloat, ky: ArrayOrFloat) -> ArrayOrFloat:
    """|k|^gamma, the symbol of (-Delta)^{gamma/2}; zero at k = 0 (also for gamma = 0)."""
    k = _norm(kx, ky)
    out = _power_away_from_zero(k, d.gamma)
    return float(out) if out.ndim == 0 else out


def riesz_symbol(s: float, kx: ArrayOrFloat, ky: ArrayOrFloat) -> ArrayOrFloat:
    """|k|^{-s}, the symbol of the Riesz potential I_s, with the k = 0 mode set to zero."""
    k = _norm(kx, ky)
    out = _power_away_from_zero(k, -s)
    return float(out) if out.ndim == 0 else out


def velocity_symbol(
    p: Union[AlphaParam, float], kx: ArrayOrFloat, ky: ArrayOrFloat
) -> Tuple[ArrayOrFloat, ArrayOrFloat]:
    """i k_perp |k|^{alpha - 2}, so that u_hat = velocity_symbol * theta_hat.

    k_perp = (-ky, kx). The k = 0 mode carries no velocity.
    """
    p = as_alpha(p)
    kx_arr = np.asarray(kx, dtype=float)
    ky_arr = np.asarray(ky, dtype=float)
    scale = _power_away_from_zero(_norm(kx_arr, ky_arr), p.alpha - 2.0)
    s1 = 1j * (-ky_arr) * scale
    s2 = 1j * kx_arr * scale
    if s1.ndim == 0:
        return complex(s1), complex(s2)
    return s1, s2
