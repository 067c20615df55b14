"""Adaptive Dormand-Prince 5(4) integration of the point vortex ODE.

Each accepted step is checked for near-collision; the run stops with a structured
termination record instead of stepping through a singularity. Every accepted step keeps
its interpolation coefficients so the trajectory can be sampled at arbitrary times.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from src.config import settings
from src.errors import CoincidentVorticesError
from src.vortex.summation import compensated_sum
from src.vortex.system import VortexSystem, hamiltonian_of, min_pairwise_distance, velocities

logger = logging.getLogger(__name__)

# Butcher tableau (Hairer, Norsett, Wanner), FSAL: the 7th stage is f at the new point.
# The system is autonomous, so the stage nodes c_i are never needed.
A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    ]
)
B = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0])
B_HAT = np.array(
    [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ]
)
E = np.append(B, 0.0) - B_HAT

# Quartic dense output: y(t + theta h) = y + h K^T P [theta, theta^2, theta^3, theta^4].
P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
ERROR_EXPONENT = -1.0 / 5.0

LEDGER_COLUMNS = ["t", "hamiltonian", "m1", "m2", "inertia", "min_separation"]


class IntegratorConfig(BaseModel):
    """Tolerances and stopping rules for :func:`integrate`.

    ``collapse_threshold`` defaults to ``settings.collapse_threshold_factor`` times the
    initial minimum separation. ``eps_reg`` switches to the regularized kernel.
    """

    rel_tol: float = Field(default=1e-10, gt=0.0)
    abs_tol: float = Field(default=1e-12, gt=0.0)
    max_steps: int = Field(default=1_000_000, gt=0)
    collapse_threshold: Optional[float] = Field(default=None, gt=0.0)
    eps_reg: Optional[float] = Field(default=None, gt=0.0)
    first_step: Optional[float] = Field(default=None, gt=0.0)
    max_step: Optional[float] = Field(default=None, gt=0.0)
    show_progress: bool = False

    @model_validator(mode="after")
    def _check_steps(self) -> "IntegratorConfig":
        if self.first_step and self.max_step and self.first_step > self.max_step:
            raise ValueError("first_step may not exceed max_step")
        return self


class TerminationKind(str, Enum):
    COMPLETED = "completed"
    COLLAPSE_DETECTED = "collapse_detected"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    time: float
    pair: Optional[Tuple[int, int]] = None
    bracket: Optional[Tuple[float, float]] = None
    separation: Optional[float] = None
    message: str = ""

    @property
    def collapsed(self) -> bool:
        return self.kind is TerminationKind.COLLAPSE_DETECTED

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "time": self.time,
            "pair": list(self.pair) if self.pair is not None else None,
            "bracket": list(self.bracket) if self.bracket is not None else None,
            "separation": self.separation,
            "message": self.message,
        }


@dataclass
class _Segment:
    t0: float
    h: float
    y0: np.ndarray
    q: np.ndarray

    def evaluate(self, t: float) -> np.ndarray:
        theta = (t - self.t0) / self.h
        powers = np.cumprod(np.full(4, theta))
        return self.y0 + self.h * (self.q @ powers)


@dataclass
class Trajectory:
    """Accepted states of one run, its conservation ledger and how it ended.

    Invariants: ``times`` is strictly increasing and every retained state has minimum
    separation above the collapse threshold.
    """

    system: VortexSystem
    times: np.ndarray
    states: np.ndarray
    ledger: pd.DataFrame
    termination: Termination
    eps_reg: Optional[float] = None
    rejected_steps: int = 0
    _segments: List[_Segment] = field(default_factory=list, repr=False)

    @property
    def final_positions(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def final_system(self) -> VortexSystem:
        return self.system.with_positions(self.final_positions)

    def sample(self, times: Sequence[float]) -> np.ndarray:
        """Dense-output positions at the requested times, shape (len(times), N, 2)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        lo, hi = float(self.times[0]), float(self.times[-1])
        if np.any(times < lo) or np.any(times > hi):
            raise ValueError(f"sample times must lie in [{lo}, {hi}]")
        n = self.system.n
        out = np.empty((times.size, n, 2))
        if not self._segments:
            out[:] = self.states[0]
            return out
        starts = np.array([s.t0 for s in self._segments])
        which = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(starts) - 1)
        for k, (t, idx) in enumerate(zip(times, which)):
            out[k] = self._segments[idx].evaluate(t).reshape(n, 2)
        return out

    def max_relative_drift(self, column: str) -> float:
        """max_t |q(t) - q(0)| / max(|q(0)|, tiny) for a ledger column."""
        series = self.ledger[column].to_numpy()
        scale = max(abs(series[0]), np.finfo(float).tiny)
        return float(np.max(np.abs(series - series[0])) / scale)


def _ledger_row(t: float, y: np.ndarray, sys: VortexSystem, eps_reg: Optional[float]) -> list:
    x = y.reshape(sys.n, 2)
    a = sys.intensities
    m = compensated_sum(a[:, None] * x, axis=0)
    inertia = float(compensated_sum(a * (x[:, 0] ** 2 + x[:, 1] ** 2)))
    separation, _ = min_pairwise_distance(x)
    h = hamiltonian_of(x, a, sys.alpha, eps_reg)
    return [t, h, float(m[0]), float(m[1]), inertia, separation]


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(fun, y0: np.ndarray, f0: np.ndarray, cfg: IntegratorConfig, span: float) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = fun(y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100.0 * h0, h1, span)


def integrate(
    sys: VortexSystem, t_end: float, cfg: Optional[IntegratorConfig] = None
) -> Trajectory:
    """Integrate ``sys`` from t = 0 to ``t_end`` (forward only; reverse via ``sys.reversed()``).

    Returns a Trajectory whose termination is ``completed``, ``collapse_detected`` (with the
    offending pair and the time bracket of the step that crossed the threshold) or
    ``step_failure``.
    """
    cfg = cfg or IntegratorConfig()
    if not t_end >= 0.0 or not math.isfinite(t_end):
        raise ValueError(f"t_end must be finite and nonnegative, got {t_end}")

    n = sys.n
    a = sys.intensities
    eps_reg = cfg.eps_reg

    def fun(y: np.ndarray) -> np.ndarray:
        return velocities(y.reshape(n, 2), a, sys.alpha, eps_reg).reshape(-1)

    d0, _ = min_pairwise_distance(sys.positions)
    if cfg.collapse_threshold is not None:
        threshold = cfg.collapse_threshold
    elif math.isfinite(d0):
        threshold = settings.collapse_threshold_factor * d0
    else:
        threshold = 0.0

    t = 0.0
    y = sys.positions.reshape(-1).copy()
    times = [t]
    states = [y.copy()]
    ledger = [_ledger_row(t, y, sys, eps_reg)]
    segments: List[_Segment] = []

    def finish(termination: Termination, rejected: int) -> Trajectory:
        logger.info(
            f"Integration ended ({termination.kind.value}) at t={termination.time:.6g} "
            f"after {len(segments)} accepted and {rejected} rejected steps"
        )
        return Trajectory(
            system=sys,
            times=np.array(times),
            states=np.array(states).reshape(-1, n, 2),
            ledger=pd.DataFrame(ledger, columns=LEDGER_COLUMNS),
            termination=termination,
            eps_reg=eps_reg,
            rejected_steps=rejected,
            _segments=segments,
        )

    if t_end == 0.0:
        return finish(Termination(TerminationKind.COMPLETED, 0.0), 0)

    k1 = fun(y)
    h = cfg.first_step or _initial_step(fun, y, k1, cfg, t_end)
    if cfg.max_step:
        h = min(h, cfg.max_step)

    rejected = 0
    previous_rejected = False
    K = np.empty((7, y.size))
    progress = tqdm(total=t_end, disable=not cfg.show_progress, desc="Integrating", unit="t")

    try:
        while t < t_end:
            if len(segments) + rejected >= cfg.max_steps:
                return finish(
                    Termination(
                        TerminationKind.STEP_FAILURE,
                        t,
                        message=f"maximum number of steps ({cfg.max_steps}) exceeded",
                    ),
                    rejected,
                )

            h_min = 16.0 * np.spacing(max(abs(t), t_end))
            if h < h_min:
                separation, pair = min_pairwise_distance(y.reshape(n, 2))
                return finish(
                    Termination(
                        TerminationKind.STEP_FAILURE,
                        t,
                        pair=pair,
                        separation=separation,
                        message=f"step size {h:.3e} fell below {h_min:.3e}",
                    ),
                    rejected,
                )

            last = t + h >= t_end
            if last:
                h = t_end - t

            try:
                K[0] = k1
                for s in range(1, 6):
                    K[s] = fun(y + h * (A[s, :s] @ K[:s]))
                y_new = y + h * (B @ K[:6])
                K[6] = fun(y_new)
            except CoincidentVorticesError as e:
                logger.debug(f"Stage evaluation hit coincident vortices {e.pair}; shrinking step")
                h *= MIN_FACTOR
                rejected += 1
                previous_rejected = True
                continue

            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms(h * (E @ K) / scale)

            if not math.isfinite(err) or err > 1.0:
                factor = MIN_FACTOR if not math.isfinite(err) else max(MIN_FACTOR, SAFETY * err**ERROR_EXPONENT)
                h *= factor
                rejected += 1
                previous_rejected = True
                continue

            t_new = t_end if last else t + h
            separation, pair = min_pairwise_distance(y_new.reshape(n, 2))
            if separation < threshold:
                return finish(
                    Termination(
                        TerminationKind.COLLAPSE_DETECTED,
                        t_new,
                        pair=pair,
                        bracket=(t, t_new),
                        separation=separation,
                        message=f"separation {separation:.3e} below threshold {threshold:.3e}",
                    ),
                    rejected,
                )

            segments.append(_Segment(t0=t, h=h, y0=y.copy(), q=K.T @ P))
            progress.update(t_new - t)
            t, y, k1 = t_new, y_new, K[6].copy()
            times.append(t)
            states.append(y.copy())
            ledger.append(_ledger_row(t, y, sys, eps_reg))

            factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err**ERROR_EXPONENT)
            if previous_rejected:
                factor = min(1.0, factor)
            previous_rejected = False
            h *= factor
            if cfg.max_step:
                h = min(h, cfg.max_step)
    finally:
        progress.close()

    return finish(Termination(TerminationKind.COMPLETED, t), rejected)
