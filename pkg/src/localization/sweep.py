"""Vanishing-dissipation sweeps over the blob scale eps.

For each eps the blob data is evolved by the PDE with kappa(eps) while the point vortex
ODE is integrated from the same centers and intensities; the concentration diagnostics
are evaluated at every recorded PDE time against the dense-output vortex positions.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from src.config import settings
from src.errors import AdmissibilityError
from src.kernels.green import DissipationParam, as_alpha
from src.localization.blobs import BlobSpec, make_blob_initial_data, resolve_grid
from src.localization.diagnostics import (
    TEST_SET_VERSION,
    CutoffSpec,
    approximate_moment_of_inertia,
    chebyshev_check,
    initial_moment_bound,
    mass_defect,
    mu_concentration,
    partition_defect,
    running_max,
    tilde_mu,
    weak_star_errors,
)
from src.spectral.field import ScalarField
from src.spectral.snapshot import write_snapshot
from src.spectral.solver import DealiasRule, SolverParams, cfl_step, run
from src.vortex.integrator import IntegratorConfig, TerminationKind, integrate
from src.vortex.system import VortexSystem, periodic_image_mismatch

logger = logging.getLogger(__name__)

# Blob radius / R above which theta cannot sit inside the R/4 cores at t = 0.
ASYMPTOTIC_CORE_RATIO = 0.25


class KappaSchedule(BaseModel):
    """kappa(eps) = 0 or c eps^p.

    Vanishing dissipation requires kappa^{(2-alpha)/2} / eps^alpha -> 0, i.e.
    p (2 - alpha) / 2 > alpha; when ``alpha`` is given it is checked here.
    """

    form: Literal["zero", "power"] = "power"
    c: float = Field(default=1.0, ge=0.0)
    p: float = Field(default=3.0, gt=0.0)
    alpha: Optional[float] = None

    @model_validator(mode="after")
    def _admissible(self) -> "KappaSchedule":
        if self.alpha is not None:
            self.check_admissible(self.alpha)
        return self

    def kappa(self, eps: float) -> float:
        if self.form == "zero":
            return 0.0
        return self.c * eps**self.p

    def check_admissible(self, alpha: float) -> None:
        if self.form == "zero" or self.c == 0.0:
            return
        lhs = self.p * (2.0 - alpha) / 2.0
        if not lhs > alpha:
            raise AdmissibilityError(
                f"kappa schedule p={self.p} is not admissible for alpha={alpha}: "
                f"p (2 - alpha) / 2 = {lhs:.6g} must exceed alpha"
            )


class PDETemplate(BaseModel):
    """PDE settings shared by every eps of a sweep.

    ``dt`` is an upper bound; each run uses the smaller of it and the CFL step of its
    initial data.
    """

    alpha: float = Field(ge=0.0, lt=2.0)
    gamma: float = Field(default=2.0, ge=0.0, le=2.0)
    t_end: float = Field(gt=0.0)
    dt: Optional[float] = Field(default=None, gt=0.0)
    stride: int = Field(default=1, ge=1)
    dealias: DealiasRule = DealiasRule.TWO_THIRDS
    length: float = Field(default=2.0 * math.pi, gt=0.0)
    box_fraction: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    max_grid_n: Optional[int] = Field(default=None, ge=16)
    cfl_number: Optional[float] = Field(default=None, gt=0.0)
    r_sensitivity_factor: float = Field(default=2.0, gt=0.0)


@dataclass
class LocalizationRun:
    eps: float
    kappa: float
    R: float
    grid_n: int = 0
    dt: float = 0.0
    series: pd.DataFrame = field(default_factory=pd.DataFrame)
    summary: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r_squared: float


def fit_rate(pairs: Sequence[Tuple[float, float]]) -> RateFit:
    """Least-squares slope of log(value) against log(eps)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError(f"fit_rate needs at least 3 pairs, got {len(pairs)}")
    eps = np.array([e for e, _ in pairs], dtype=float)
    values = np.array([v for _, v in pairs], dtype=float)
    if np.any(eps <= 0.0) or np.any(values <= 0.0):
        raise ValueError("fit_rate needs positive eps and values")
    x, y = np.log(eps), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(residual**2)) / ss_tot
    return RateFit(exponent=float(slope), intercept=float(intercept), r_squared=r_squared)


def _diagnostics_observer(
    trajectory,
    spec: BlobSpec,
    cutoff: CutoffSpec,
    alt_cutoff: CutoffSpec,
    box_fraction: Optional[float],
    snapshot_dir: Optional[Path],
    solver: SolverParams,
):
    intensities = spec.intensities

    def observe(t: float, theta: ScalarField) -> Dict[str, float]:
        positions = trajectory.sample([min(t, trajectory.final_time)])[0]
        weak = weak_star_errors(theta, positions, intensities)
        defect = mass_defect(theta, positions, intensities, cutoff.R, box_fraction)
        checks = [
            chebyshev_check(theta, positions, cutoff, cutoff.R * f, box_fraction).holds
            for f in (0.25, 0.5)
        ]
        row = {
            "I": approximate_moment_of_inertia(theta, positions, cutoff, box_fraction),
            "I_alt": approximate_moment_of_inertia(theta, positions, alt_cutoff, box_fraction),
            "mu": mu_concentration(theta, positions, cutoff, box_fraction=box_fraction),
            "tilde_mu": tilde_mu(theta, positions, intensities, cutoff, box_fraction),
            "weak_star": max(weak.values()),
            "mass_defect": float(np.max(defect.inside)),
            "outside_mass": float(np.max(defect.outside)),
            "partition_defect": partition_defect(theta, positions, cutoff, box_fraction),
            "chebyshev_ok": float(all(checks)),
        }
        row.update({f"ws_{name}": value for name, value in weak.items()})
        for i, (x1, x2) in enumerate(positions):
            row[f"x{i}_1"] = float(x1)
            row[f"x{i}_2"] = float(x2)
        if snapshot_dir is not None:
            write_snapshot(
                Path(snapshot_dir) / f"eps_{spec.eps:g}" / f"t_{t:.6f}.gsqg",
                theta,
                t,
                solver.alpha,
                solver.diss,
            )
        return row

    return observe


def run_single_eps(
    blobs: BlobSpec,
    eps: float,
    kappa: KappaSchedule,
    cutoff: Optional[CutoffSpec],
    pde: PDETemplate,
    snapshot_dir: Optional[Path] = None,
) -> LocalizationRun:
    """One eps of the sweep; failures are recorded on the returned run, not raised."""
    spec = blobs.with_eps(eps)
    cutoff = cutoff or CutoffSpec(R=spec.d0 / 100.0)
    result = LocalizationRun(eps=eps, kappa=kappa.kappa(eps), R=cutoff.R)
    try:
        alpha = as_alpha(pde.alpha)
        kappa.check_admissible(alpha.alpha)
        grid = resolve_grid(eps, spec.d0, pde.length, pde.max_grid_n)
        theta0 = make_blob_initial_data(spec, grid, pde.box_fraction)
        if spec.radius > ASYMPTOTIC_CORE_RATIO * cutoff.R:
            logger.warning(
                f"eps={eps}: blob radius {spec.radius:.3g} exceeds R/4 = {cutoff.R / 4:.3g}; "
                "the diagnostics measure the pre-asymptotic regime"
            )

        system = VortexSystem(spec.intensities, spec.centers, alpha)
        trajectory = integrate(system, pde.t_end, IntegratorConfig())
        if trajectory.termination.kind is not TerminationKind.COMPLETED:
            raise RuntimeError(f"vortex ODE ended early: {trajectory.termination.message}")
        d_t = float(trajectory.ledger["min_separation"].min())
        cutoff.check_admissible(d_t)

        cfl_number = pde.cfl_number or settings.cfl_number
        dt = min(pde.dt or math.inf, cfl_step(theta0, alpha, cfl_number))
        if not math.isfinite(dt):
            dt = pde.t_end / 100.0
        solver = SolverParams(
            alpha=alpha,
            diss=DissipationParam(gamma=pde.gamma, kappa=result.kappa),
            dt=dt,
            t_end=pde.t_end,
            dealias=pde.dealias,
            cfl_number=cfl_number,
        )
        alt_cutoff = cutoff.scaled(pde.r_sensitivity_factor)
        observer = _diagnostics_observer(
            trajectory, spec, cutoff, alt_cutoff, pde.box_fraction, snapshot_dir, solver
        )
        record = run(theta0, solver, observers=[observer], stride=pde.stride)

        series = record.series
        series["Ibar"] = running_max(series["I"])
        series["Ibar_alt"] = running_max(series["I_alt"])
        scale = max(result.kappa, eps * eps)
        ibar_t = float(series["Ibar"].iloc[-1])

        result.grid_n = grid.n
        result.dt = record.dt
        result.series = series
        result.summary = {
            "eps": eps,
            "kappa": result.kappa,
            "R": cutoff.R,
            "R_alt": alt_cutoff.R,
            "grid_n": grid.n,
            "dt": record.dt,
            "steps": record.steps,
            "d_T": d_t,
            "sup_weak_star": float(series["weak_star"].max()),
            "Ibar_T": ibar_t,
            "ratio": ibar_t / scale,
            "ratio_alt": float(series["Ibar_alt"].iloc[-1]) / scale,
            "sup_mass_defect": float(series["mass_defect"].max()),
            "sup_outside_mass": float(series["outside_mass"].max()),
            "mu_0": float(series["mu"].iloc[0]),
            "tilde_mu_0": float(series["tilde_mu"].iloc[0]),
            "I_0": float(series["I"].iloc[0]),
            "I_0_bound": initial_moment_bound(spec.c1, eps, spec.intensities),
            "chebyshev_violations": int((series["chebyshev_ok"] < 1.0).sum()),
            "max_partition_defect": float(series["partition_defect"].max()),
            "gradient_growth_flag": record.gradient_growth_flag,
            "periodic_image_mismatch": periodic_image_mismatch(system, pde.length)["relative"],
            "c2": spec.c2,
            "core_over_R": spec.radius / cutoff.R,
        }
        logger.info(
            f"eps={eps}: n={grid.n}, sup weak-* {result.summary['sup_weak_star']:.3e}, "
            f"Ibar(T)/max(kappa, eps^2) = {result.summary['ratio']:.3e}"
        )
    except Exception as e:
        logger.error(f"eps={eps} failed: {e}")
        result.error = f"{type(e).__name__}: {e}"
    return result


def _optional_fit(pairs: List[Tuple[float, float]]) -> Optional[Dict[str, float]]:
    try:
        fit = fit_rate(pairs)
    except ValueError:
        return None
    return {"exponent": fit.exponent, "intercept": fit.intercept, "r_squared": fit.r_squared}


def summarize_sweep(runs: Sequence[LocalizationRun]) -> Dict[str, Any]:
    """Deterministic fold over the runs in ascending eps."""
    ordered = sorted(runs, key=lambda r: r.eps)
    ok = [r for r in ordered if r.ok]
    sup_ws = [r.summary["sup_weak_star"] for r in ok]
    ratios = [r.summary["ratio"] for r in ok]
    ratios_alt = [r.summary["ratio_alt"] for r in ok]

    monotone = None
    if len(ok) >= 2:
        monotone = all(a < b for a, b in zip(sup_ws, sup_ws[1:]))

    def spread(values):
        if not values or min(values) <= 0.0:
            return None
        return max(values) / min(values)

    return {
        "eps": [r.eps for r in ordered],
        "failures": {f"{r.eps:g}": r.error for r in ordered if not r.ok},
        "monotone_weak_star": monotone,
        "sup_weak_star": sup_ws,
        "empirical_D": max(ratios) if ratios else None,
        "D_spread": spread(ratios),
        "empirical_D_alt": max(ratios_alt) if ratios_alt else None,
        "D_spread_alt": spread(ratios_alt),
        "mass_defect_fit": _optional_fit([(r.eps, r.summary["sup_mass_defect"]) for r in ok]),
        "weak_star_fit": _optional_fit([(r.eps, r.summary["sup_weak_star"]) for r in ok]),
        "pre_asymptotic": [r.eps for r in ok if r.summary.get("core_over_R", 0.0) > ASYMPTOTIC_CORE_RATIO],
        "test_set_version": TEST_SET_VERSION,
    }


def run_localization_sweep(
    blobs: BlobSpec,
    eps_list: Sequence[float],
    kappa: KappaSchedule,
    cutoff: Optional[CutoffSpec],
    pde: PDETemplate,
    threads: Optional[int] = None,
    snapshot_dir: Optional[Path] = None,
) -> Tuple[List[LocalizationRun], Dict[str, Any]]:
    """Run every eps (in parallel when ``threads`` > 1) and summarize.

    Args:
        blobs: Blob template; its eps is replaced by each entry of ``eps_list``
        eps_list: Blob scales
        kappa: Dissipation schedule
        cutoff: Cutoff radius (defaults to d0 / 100)
        pde: Shared PDE settings
        threads: Worker processes (defaults to ``settings.threads``)
        snapshot_dir: Write GSQGFLD1 snapshots of every recorded field here

    Returns:
        The runs in ascending eps and the sweep summary
    """
    if not eps_list:
        raise ValueError("eps_list is empty")
    kappa.check_admissible(pde.alpha)
    threads = threads or settings.threads
    eps_sorted = sorted(eps_list)
    logger.info(f"Localization sweep over eps={eps_sorted} with {threads} worker(s)")

    if threads > 1 and len(eps_sorted) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(run_single_eps, blobs, eps, kappa, cutoff, pde, snapshot_dir)
                for eps in eps_sorted
            ]
            runs = [f.result() for f in tqdm(futures, desc="Sweeping eps")]
    else:
        runs = [
            run_single_eps(blobs, eps, kappa, cutoff, pde, snapshot_dir)
            for eps in tqdm(eps_sorted, desc="Sweeping eps")
        ]

    failed = [r for r in runs if not r.ok]
    if failed:
        logger.warning(f"{len(failed)} of {len(runs)} eps runs failed")
    return runs, summarize_sweep(runs)
