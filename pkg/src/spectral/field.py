"""Periodic grids and scalar fields with cached spectral coefficients."""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import scipy.fft

from src.config import settings

logger = logging.getLogger(__name__)


def fft2(values: np.ndarray) -> np.ndarray:
    return scipy.fft.fft2(values, workers=settings.threads)


def ifft2(coeffs: np.ndarray) -> np.ndarray:
    return scipy.fft.ifft2(coeffs, workers=settings.threads)


@dataclass(frozen=True)
class Grid:
    """Uniform n x n grid on the square torus of period ``length``.

    Physical samples sit at x_j = j * length / n; row index is x2 (y), column index is x1 (x).
    """

    n: int
    length: float = 2.0 * math.pi

    def __post_init__(self):
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {self.n}")
        if not self.length > 0.0:
            raise ValueError(f"grid period must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def cell_area(self) -> float:
        return self.dx * self.dx

    @property
    def center(self) -> np.ndarray:
        return np.array([self.length / 2.0, self.length / 2.0])

    @property
    def coordinates(self) -> np.ndarray:
        return _coordinates(self.n, self.length)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Physical coordinates (x1, x2) of every sample, each of shape (n, n)."""
        return _mesh(self.n, self.length)

    def wavevectors(self) -> Tuple[np.ndarray, np.ndarray]:
        """Wavevector components (k1, k2) aligned with the fft2 layout."""
        return _wavevectors(self.n, self.length)

    def mode_indices(self) -> np.ndarray:
        """Signed integer mode index along one axis, in fft order."""
        return _mode_indices(self.n)

    def nyquist_mask(self) -> np.ndarray:
        """True on every mode except those in the Nyquist row or column."""
        m = self.mode_indices()
        keep = np.abs(m) < self.n // 2
        return keep[:, None] & keep[None, :]

    def two_thirds_mask(self) -> np.ndarray:
        """Orszag's rule: keep |m| <= n/3 along each axis."""
        m = self.mode_indices()
        keep = np.abs(m) <= self.n // 3
        return keep[:, None] & keep[None, :]

    def central_box(self, fraction: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of the centered sub-box of side ``fraction * length``."""
        fraction = settings.central_box_fraction if fraction is None else fraction
        half = fraction * self.length / 2.0
        return self.center - half, self.center + half


@lru_cache(maxsize=16)
def _coordinates(n: int, length: float) -> np.ndarray:
    x = np.arange(n) * (length / n)
    x.setflags(write=False)
    return x


@lru_cache(maxsize=16)
def _mesh(n: int, length: float) -> Tuple[np.ndarray, np.ndarray]:
    x = _coordinates(n, length)
    x1, x2 = np.meshgrid(x, x, indexing="xy")
    x1.setflags(write=False)
    x2.setflags(write=False)
    return x1, x2


@lru_cache(maxsize=16)
def _mode_indices(n: int) -> np.ndarray:
    m = np.rint(scipy.fft.fftfreq(n) * n).astype(int)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=16)
def _wavevectors(n: int, length: float) -> Tuple[np.ndarray, np.ndarray]:
    k = _mode_indices(n) * (2.0 * math.pi / length)
    k1, k2 = np.meshgrid(k, k, indexing="xy")
    k1.setflags(write=False)
    k2.setflags(write=False)
    return k1, k2


class ScalarField:
    """Real field on a periodic grid.

    Either representation may be supplied; the other is computed on first access and
    cached. Both arrays are read-only, so a field is safe to share between observers.
    """

    def __init__(
        self,
        grid: Grid,
        values: Optional[np.ndarray] = None,
        spectral: Optional[np.ndarray] = None,
    ):
        if values is None and spectral is None:
            raise ValueError("a field needs physical values or spectral coefficients")
        self.grid = grid
        self._values = self._freeze(values, float) if values is not None else None
        self._spectral = self._freeze(spectral, complex) if spectral is not None else None
        self._interpolated: Dict[Tuple[bytes, bytes], np.ndarray] = {}

    def _freeze(self, array: np.ndarray, dtype) -> np.ndarray:
        array = np.array(array, dtype=dtype, copy=True)
        if array.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"expected shape {(self.grid.n, self.grid.n)}, got {array.shape}")
        array.setflags(write=False)
        return array

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        x1, x2 = grid.mesh()
        return cls(grid, values=np.broadcast_to(fn(x1, x2), (grid.n, grid.n)))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, values=np.zeros((grid.n, grid.n)))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            values = ifft2(self._spectral).real
            values.setflags(write=False)
            self._values = values
        return self._values

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            spectral = fft2(self._values)
            spectral.setflags(write=False)
            self._spectral = spectral
        return self._spectral

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values=values)

    def scaled(self, factor: float) -> "ScalarField":
        return ScalarField(self.grid, values=factor * self.values)

    def shifted(self, rows: int, cols: int) -> "ScalarField":
        """Translate by whole grid cells (periodically)."""
        return ScalarField(self.grid, values=np.roll(self.values, (rows, cols), axis=(0, 1)))

    def integral(self, weight: Optional[np.ndarray] = None) -> float:
        """Trapezoidal (here: rectangle) rule, spectrally accurate for periodic integrands."""
        integrand = self.values if weight is None else self.values * weight
        return float(np.sum(integrand) * self.grid.cell_area)

    def lp_norm(self, p: float) -> float:
        if math.isinf(p):
            return float(np.max(np.abs(self.values)))
        return float((np.sum(np.abs(self.values) ** p) * self.grid.cell_area) ** (1.0 / p))

    def inner(self, other: "ScalarField") -> float:
        return float(np.sum(self.values * other.values) * self.grid.cell_area)

    def gradient(self) -> Tuple[np.ndarray, np.ndarray]:
        """Spectral gradient (d/dx1, d/dx2) with the Nyquist modes removed."""
        k1, k2 = self.grid.wavevectors()
        coeffs = self.spectral * self.grid.nyquist_mask()
        return ifft2(1j * k1 * coeffs).real, ifft2(1j * k2 * coeffs).real

    def conjugate_symmetry_defect(self) -> float:
        """max |c(k) - conj(c(-k))| / max |c|, which vanishes for a real field."""
        c = self.spectral
        mirrored = np.conj(np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1)))
        scale = max(float(np.max(np.abs(c))), np.finfo(float).tiny)
        return float(np.max(np.abs(c - mirrored)) / scale)

    def interpolate(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Trigonometric interpolant on the tensor product of ``x2`` (rows) and ``x1`` (columns).

        Coordinates are physical (periodic) positions; results are cached per field.
        """
        x1 = np.ascontiguousarray(x1, dtype=float)
        x2 = np.ascontiguousarray(x2, dtype=float)
        key = (x1.tobytes(), x2.tobytes())
        cached = self._interpolated.get(key)
        if cached is not None:
            return cached
        k = self.grid.mode_indices() * (2.0 * math.pi / self.grid.length)
        e1 = np.exp(1j * np.outer(x1, k))
        e2 = np.exp(1j * np.outer(x2, k))
        values = (e2 @ self.spectral @ e1.T).real / (self.grid.n * self.grid.n)
        values.setflags(write=False)
        self._interpolated[key] = values
        return values

    def __repr__(self) -> str:
        return f"ScalarField(n={self.grid.n}, length={self.grid.length:.6g})"


def gaussian_blob(
    grid: Grid, center: Tuple[float, float], width: float, mass: float = 1.0
) -> ScalarField:
    """Radial Gaussian of the given mass and standard deviation (free-space profile)."""
    cx, cy = center

    def profile(x1, x2):
        r2 = (x1 - cx) ** 2 + (x2 - cy) ** 2
        return mass / (2.0 * math.pi * width * width) * np.exp(-r2 / (2.0 * width * width))

    return ScalarField.from_function(grid, profile)
