"""Pseudo-spectral solver for d_t theta + u . grad theta + kappa (-Delta)^{gamma/2} theta = 0.

Velocity is the gSQG Biot-Savart law applied as a Fourier multiplier, products are formed
in physical space with derivatives taken spectrally, and dissipation is integrated exactly
by an integrating factor around classical RK4.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator
from tqdm import tqdm

from src.config import settings
from src.errors import AdmissibilityError, SolverInstabilityError
from src.kernels.green import AlphaParam, DissipationParam, as_alpha
from src.kernels.symbols import fractional_symbol, riesz_symbol, velocity_symbol
from src.spectral.field import Grid, ScalarField, fft2, ifft2

logger = logging.getLogger(__name__)

# One step may not grow the sup norm by more than this factor.
INSTABILITY_GROWTH = 10.0
# Runs are flagged once max |grad theta| exceeds this multiple of its initial value.
GRADIENT_GROWTH_FLAG = 1e3

Observer = Callable[[float, ScalarField], Optional[Dict[str, float]]]


class DealiasRule(str, Enum):
    TWO_THIRDS = "two_thirds"
    NONE = "none"
    THREE_HALVES = "three_halves"


class SolverParams(BaseModel):
    """Parameters of one PDE run.

    The CFL condition depends on the initial field, so it is checked by
    :meth:`check_cfl` (and by :func:`run`) rather than at construction.
    """

    model_config = ConfigDict(frozen=True)

    alpha: AlphaParam
    diss: DissipationParam = Field(default_factory=lambda: DissipationParam(kappa=0.0))
    dt: float = Field(gt=0.0)
    t_end: float = Field(default=1.0, ge=0.0)
    dealias: DealiasRule = DealiasRule.TWO_THIRDS
    cfl_number: float = Field(default_factory=lambda: settings.cfl_number, gt=0.0)

    @field_validator("alpha", mode="before")
    @classmethod
    def _coerce_alpha(cls, value):
        if isinstance(value, (int, float)):
            return as_alpha(value)
        return value

    def check_cfl(self, theta0: ScalarField) -> float:
        """Return the CFL-admissible step for ``theta0`` and raise if ``dt`` exceeds it."""
        bound = cfl_step(theta0, self.alpha, self.cfl_number)
        if self.dt > bound:
            raise AdmissibilityError(
                f"dt={self.dt:.6g} exceeds the CFL bound {bound:.6g} "
                f"(c_cfl={self.cfl_number}, dx={theta0.grid.dx:.6g})"
            )
        return bound


def cfl_step(theta: ScalarField, p: AlphaParam, cfl_number: float) -> float:
    """c_cfl dx / max |u|, infinite for a field that induces no velocity."""
    u1, u2 = velocity_from_theta(theta, p)
    umax = float(np.max(np.hypot(u1.values, u2.values)))
    if umax == 0.0:
        return math.inf
    return cfl_number * theta.grid.dx / umax


def velocity_from_theta(theta: ScalarField, p: AlphaParam) -> Tuple[ScalarField, ScalarField]:
    """u = grad_perp G_alpha * theta; the k = 0 and Nyquist modes carry no velocity."""
    grid = theta.grid
    k1, k2 = grid.wavevectors()
    s1, s2 = velocity_symbol(p, k1, k2)
    coeffs = theta.spectral * grid.nyquist_mask()
    return ScalarField(grid, spectral=s1 * coeffs), ScalarField(grid, spectral=s2 * coeffs)


def _padded_size(n: int) -> int:
    return 3 * n // 2


def _pad(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    """Zero-pad n x n spectral data to m x m, scaled so physical values are unchanged."""
    dest = Grid(n).mode_indices() % m
    out = np.zeros((m, m), dtype=complex)
    out[np.ix_(dest, dest)] = coeffs * (m / n) ** 2
    return out


def _truncate(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    src = Grid(n).mode_indices() % m
    return coeffs[np.ix_(src, src)] * (n / m) ** 2


def _nonlinear_spectral(
    theta: ScalarField, p: AlphaParam, rule: DealiasRule, conservative: bool
) -> np.ndarray:
    grid = theta.grid
    n = grid.n
    k1, k2 = grid.wavevectors()
    keep = grid.two_thirds_mask() if rule is DealiasRule.TWO_THIRDS else grid.nyquist_mask()
    coeffs = theta.spectral * keep
    s1, s2 = velocity_symbol(p, k1, k2)

    if rule is DealiasRule.THREE_HALVES:
        m = _padded_size(n)

        def to_physical(c):
            return ifft2(_pad(c, n, m)).real

        def to_spectral(v):
            return _truncate(fft2(v), n, m)

    else:

        def to_physical(c):
            return ifft2(c).real

        to_spectral = fft2

    u1 = to_physical(s1 * coeffs)
    u2 = to_physical(s2 * coeffs)
    if conservative:
        th = to_physical(coeffs)
        out = 1j * k1 * to_spectral(u1 * th) + 1j * k2 * to_spectral(u2 * th)
    else:
        gx = to_physical(1j * k1 * coeffs)
        gy = to_physical(1j * k2 * coeffs)
        out = to_spectral(u1 * gx + u2 * gy)
    out = out * keep
    # u is divergence-free, so the advection term has zero mean
    out[0, 0] = 0.0
    return out


def nonlinear_term(
    theta: ScalarField, p: AlphaParam, rule: DealiasRule = DealiasRule.TWO_THIRDS
) -> ScalarField:
    """u . grad theta in advective form."""
    return ScalarField(theta.grid, spectral=_nonlinear_spectral(theta, p, DealiasRule(rule), False))


def conservative_nonlinear_term(
    theta: ScalarField, p: AlphaParam, rule: DealiasRule = DealiasRule.TWO_THIRDS
) -> ScalarField:
    """div(u theta); equal to the advective form for divergence-free u."""
    return ScalarField(theta.grid, spectral=_nonlinear_spectral(theta, p, DealiasRule(rule), True))


def _dissipation_rate(grid: Grid, d: DissipationParam) -> np.ndarray:
    if d.inviscid:
        return np.zeros((grid.n, grid.n))
    k1, k2 = grid.wavevectors()
    return d.kappa * fractional_symbol(d, k1, k2)


def step(theta: ScalarField, params: SolverParams, dt: Optional[float] = None) -> ScalarField:
    """One integrating-factor RK4 step.

    With L = kappa |k|^gamma, E = exp(-L dt) and E2 = exp(-L dt / 2), the stages are
    a = dt g(v), b = dt g(E2 (v + a/2)), c = dt g(E2 v + b/2), d = dt g(E v + E2 c) and
    v' = E v + (E a + 2 E2 (b + c) + d) / 6, where g = -FFT(u . grad theta).
    """
    h = params.dt if dt is None else dt
    grid = theta.grid
    rate = _dissipation_rate(grid, params.diss)
    e_full = np.exp(-rate * h)
    e_half = np.exp(-rate * h / 2.0)

    def g(v: np.ndarray) -> np.ndarray:
        field_v = ScalarField(grid, spectral=v)
        return -_nonlinear_spectral(field_v, params.alpha, params.dealias, False)

    v = np.array(theta.spectral)
    a = h * g(v)
    b = h * g(e_half * (v + a / 2.0))
    c = h * g(e_half * v + b / 2.0)
    d = h * g(e_full * v + e_half * c)
    v_new = e_full * v + (e_full * a + 2.0 * e_half * (b + c) + d) / 6.0

    new = ScalarField(grid, spectral=v_new)
    before = theta.lp_norm(math.inf)
    after = new.lp_norm(math.inf)
    if not math.isfinite(after) or (before > 0.0 and after > INSTABILITY_GROWTH * before):
        raise SolverInstabilityError(
            f"sup norm grew from {before:.6g} to {after:.6g} in one step of size {h:.6g}"
        )
    return new


def observables(theta: ScalarField, p: AlphaParam) -> Dict[str, float]:
    """Norms, extrema, the discrete Hamiltonian 1/2 <theta, G_alpha * theta> and max |grad theta|."""
    grid = theta.grid
    k1, k2 = grid.wavevectors()
    weights = riesz_symbol(2.0 - p.alpha, k1, k2)
    power = np.abs(theta.spectral) ** 2
    hamiltonian = 0.5 * float(np.sum(power * weights)) * grid.cell_area / (grid.n * grid.n)
    gx, gy = theta.gradient()
    values = theta.values
    return {
        "l1": theta.lp_norm(1.0),
        "l2": theta.lp_norm(2.0),
        "linf": theta.lp_norm(math.inf),
        "min": float(np.min(values)),
        "max": float(np.max(values)),
        "hamiltonian": hamiltonian,
        "max_grad": float(np.max(np.hypot(gx, gy))),
    }


@dataclass
class RunRecord:
    final: ScalarField
    series: pd.DataFrame
    steps: int
    dt: float
    gradient_growth_flag: bool = False
    snapshots: List[Tuple[float, ScalarField]] = field(default_factory=list, repr=False)

    @property
    def t_final(self) -> float:
        return self.steps * self.dt


def run(
    theta0: ScalarField,
    params: SolverParams,
    observers: Sequence[Observer] = (),
    stride: int = 1,
    keep_snapshots: bool = False,
    show_progress: bool = False,
) -> RunRecord:
    """Advance ``theta0`` to ``params.t_end``, recording observables every ``stride`` steps.

    The step is shortened uniformly so that an integer number of steps lands on t_end.
    Each observer is called as ``observer(t, theta)`` at the recorded times and may return
    extra columns for the series.

    Args:
        theta0: Initial field
        params: Solver parameters
        observers: Callbacks evaluated at every recorded time
        stride: Record every ``stride``-th step (the final step is always recorded)
        keep_snapshots: Also keep the recorded fields
        show_progress: Show a tqdm progress bar

    Returns:
        RunRecord with the final field and the observable series
    """
    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    params.check_cfl(theta0)

    steps = 0 if params.t_end == 0.0 else math.ceil(params.t_end / params.dt - 1e-9)
    dt = params.t_end / steps if steps else params.dt
    logger.info(
        f"Spectral run: n={theta0.grid.n}, alpha={params.alpha.alpha}, "
        f"kappa={params.diss.kappa}, gamma={params.diss.gamma}, dt={dt:.6g}, steps={steps}, "
        f"dealias={params.dealias.value}"
    )

    rows = []
    snapshots = []
    initial_grad = None
    flagged = False

    def record(t: float, theta: ScalarField):
        nonlocal initial_grad, flagged
        row = {"t": t, **observables(theta, params.alpha)}
        if initial_grad is None:
            initial_grad = row["max_grad"]
        elif initial_grad > 0.0 and row["max_grad"] > GRADIENT_GROWTH_FLAG * initial_grad and not flagged:
            flagged = True
            logger.warning(f"max|grad theta| grew by more than {GRADIENT_GROWTH_FLAG:g}x by t={t:.6g}")
        for observer in observers:
            extra = observer(t, theta)
            if extra:
                row.update(extra)
        rows.append(row)
        if keep_snapshots:
            snapshots.append((t, theta))

    theta = theta0
    record(0.0, theta)
    for m in tqdm(range(1, steps + 1), desc="Stepping", disable=not show_progress):
        theta = step(theta, params, dt)
        if m % stride == 0 or m == steps:
            record(m * dt, theta)

    return RunRecord(
        final=theta,
        series=pd.DataFrame(rows),
        steps=steps,
        dt=dt,
        gradient_growth_flag=flagged,
        snapshots=snapshots,
    )
