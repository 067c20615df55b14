"""Command-line entry point: ``gsqg {pv,field,localize,mc,check}``.

Every mode reads an optional TOML config (a path or the name of a shipped preset),
applies the command-line overrides, validates the result and writes CSV/JSON artifacts
under ``--out``. Exit codes: 0 success, 1 run failure, 2 usage or config error.
"""

import argparse
import logging
import math
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from src.artifacts import run_metadata, write_csv, write_json
from src.cli.checks import CHECKS, run_checks
from src.config import ensure_directories, settings
from src.errors import AdmissibilityError, ConfigError, GSQGError
from src.kernels.green import DissipationParam
from src.localization.blobs import BlobSpec, make_blob_initial_data, resolve_grid
from src.localization.diagnostics import CutoffSpec
from src.localization.sweep import KappaSchedule, PDETemplate, run_localization_sweep
from src.spectral.field import Grid, ScalarField, gaussian_blob
from src.spectral.snapshot import write_observables_csv, write_snapshot
from src.spectral.solver import DealiasRule, SolverParams, run
from src.vortex.export import export_monte_carlo, export_trajectory
from src.vortex.integrator import IntegratorConfig, TerminationKind, integrate
from src.vortex.montecarlo import SamplerSpec, monte_carlo_collapse
from src.vortex.system import (
    VortexSystem,
    collapsing_example,
    pairwise_distance_ratios,
    periodic_image_mismatch,
    rotation_period,
    separation_lower_bound_same_sign,
    two_vortex_solution,
)

logging.basicConfig(level=settings.log_level)
logger = logging.getLogger(__name__)

MODES = ("pv", "field", "localize", "mc", "check")
EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class PVSection(BaseModel):
    """Point-vortex run; either a named example or explicit vortices."""

    example: Optional[Literal["collapse_idc", "two_vortex_rotation"]] = None
    alpha: float = Field(default=0.0, ge=0.0, lt=2.0)
    intensities: Optional[List[float]] = None
    positions: Optional[List[Tuple[float, float]]] = None
    t_end: Optional[float] = Field(default=None, gt=0.0)
    periods: float = Field(default=1.0, gt=0.0)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    periodic_check_length: float = Field(default=2.0 * math.pi, gt=0.0)

    @model_validator(mode="after")
    def _one_source(self) -> "PVSection":
        if self.example is None and (self.intensities is None or self.positions is None):
            raise ValueError("pv needs either 'example' or both 'intensities' and 'positions'")
        if self.example != "two_vortex_rotation" and self.t_end is None:
            raise ValueError("pv needs 't_end' unless the two-vortex example sets it from the period")
        self.system()
        return self

    def system(self) -> VortexSystem:
        if self.example == "collapse_idc":
            return collapsing_example(self.alpha)
        if self.example == "two_vortex_rotation" and self.intensities is None:
            return VortexSystem([1.0, 1.0], [[-0.5, 0.0], [0.5, 0.0]], self.alpha)
        return VortexSystem(self.intensities, self.positions, self.alpha)


class GaussianSpec(BaseModel):
    center: Tuple[float, float]
    width: float = Field(gt=0.0)
    mass: float = 1.0


class FieldSection(BaseModel):
    """Standalone spectral run from Gaussians or blob data; centers are box-centered."""

    alpha: float = Field(ge=0.0, lt=2.0)
    gamma: float = Field(default=2.0, ge=0.0, le=2.0)
    kappa: float = Field(default=0.0, ge=0.0)
    n: Optional[int] = Field(default=None, ge=16)
    length: float = Field(default=2.0 * math.pi, gt=0.0)
    dt: float = Field(gt=0.0)
    t_end: float = Field(gt=0.0)
    dealias: DealiasRule = DealiasRule.TWO_THIRDS
    stride: int = Field(default=1, ge=1)
    gaussians: List[GaussianSpec] = Field(default_factory=list)
    blobs: Optional[BlobSpec] = None

    @model_validator(mode="after")
    def _one_initial_datum(self) -> "FieldSection":
        if bool(self.gaussians) == (self.blobs is not None):
            raise ValueError("field needs exactly one of 'gaussians' or 'blobs'")
        if self.gaussians and self.n is None:
            raise ValueError("field with gaussians needs the grid size 'n'")
        return self

    def initial_field(self) -> ScalarField:
        if self.blobs is not None:
            grid = Grid(self.n, self.length) if self.n else resolve_grid(self.blobs.eps, self.blobs.d0, self.length)
            return make_blob_initial_data(self.blobs, grid)
        grid = Grid(self.n, self.length)
        values = np.zeros((grid.n, grid.n))
        for g in self.gaussians:
            center = (grid.center[0] + g.center[0], grid.center[1] + g.center[1])
            values += gaussian_blob(grid, center, g.width, g.mass).values
        return ScalarField(grid, values=values)

    def params(self) -> SolverParams:
        return SolverParams(
            alpha=self.alpha,
            diss=DissipationParam(gamma=self.gamma, kappa=self.kappa),
            dt=self.dt,
            t_end=self.t_end,
            dealias=self.dealias,
        )


class LocalizeSection(BaseModel):
    blobs: BlobSpec
    eps_list: List[float] = Field(min_length=1)
    kappa: KappaSchedule = Field(default_factory=KappaSchedule)
    R: Optional[float] = Field(default=None, gt=0.0)
    pde: PDETemplate
    write_snapshots: bool = False

    @model_validator(mode="after")
    def _admissible(self) -> "LocalizeSection":
        if any(not 0.0 < eps <= 1.0 for eps in self.eps_list):
            raise ValueError("every eps must lie in (0, 1]")
        self.kappa.check_admissible(self.pde.alpha)
        if self.R is not None and self.R > self.blobs.d0 / 100.0:
            raise AdmissibilityError(
                f"R={self.R} exceeds d0/100 = {self.blobs.d0 / 100.0:.6g}; "
                "the cutoff must sit well inside the minimum vortex separation"
            )
        return self

    def cutoff(self) -> Optional[CutoffSpec]:
        return None if self.R is None else CutoffSpec(R=self.R)


class MCSection(BaseModel):
    n_samples: int = Field(gt=0)
    t_end: float = Field(gt=0.0)
    alpha: float = Field(default=0.0, ge=0.0, lt=2.0)
    sampler: SamplerSpec = Field(default_factory=SamplerSpec)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    include_collapse_example: bool = False


class CheckSection(BaseModel):
    scale: Literal["quick", "full"] = "quick"
    only: Optional[List[str]] = None

    @model_validator(mode="after")
    def _known(self) -> "CheckSection":
        unknown = [name for name in self.only or [] if name not in CHECKS]
        if unknown:
            raise ValueError(f"unknown check groups {unknown}; available: {sorted(CHECKS)}")
        return self


class RunConfig(BaseModel):
    """A validated run: the mode, seed, output directory and the mode's section."""

    mode: Literal["pv", "field", "localize", "mc", "check"]
    seed: int = Field(default_factory=lambda: settings.seed, ge=0, lt=2**64)
    output_dir: Path = Field(default_factory=lambda: settings.output_dir)
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
    snapshot_stride: Optional[int] = Field(default=None, ge=1)
    pv: Optional[PVSection] = None
    field: Optional[FieldSection] = None
    localize: Optional[LocalizeSection] = None
    mc: Optional[MCSection] = None
    check: CheckSection = Field(default_factory=CheckSection)

    @model_validator(mode="after")
    def _section_present(self) -> "RunConfig":
        if self.mode != "check" and getattr(self, self.mode) is None:
            raise ValueError(f"mode '{self.mode}' needs a [{self.mode}] section")
        return self

    def hashed(self) -> dict:
        """The part of the config that determines results (not where they are written)."""
        return self.model_dump(mode="json", exclude={"output_dir"})


def _resolve_config_path(value: str) -> Path:
    path = Path(value)
    if path.exists():
        return path
    preset = settings.presets_dir / f"{value}.toml"
    if preset.exists():
        return preset
    raise ConfigError(f"config {value!r} is neither a file nor a preset in {settings.presets_dir}")


def parse_config(path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    """Load a TOML config (file or preset name), apply overrides and validate.

    Raises:
        ConfigError: unreadable TOML or a config that fails validation
    """
    raw: dict = {}
    if path:
        resolved = _resolve_config_path(path)
        try:
            with open(resolved, "rb") as f:
                raw = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{resolved}: {e}") from e
        logger.info(f"Loaded config {resolved}")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(f"{location}: {first['msg']}") from e


def run_pv(cfg: RunConfig, out: Path, metadata: dict) -> int:
    section = cfg.pv
    system = section.system()
    t_end = section.t_end or section.periods * rotation_period(system)
    trajectory = integrate(system, t_end, section.integrator)
    export_trajectory(trajectory, out, metadata)

    report = {
        "periodic_image_mismatch": periodic_image_mismatch(system, section.periodic_check_length),
    }
    if system.same_sign and system.alpha.alpha > 0.0 and system.n > 1:
        bound = separation_lower_bound_same_sign(system)
        report["separation_bound"] = bound
        report["bound_violated"] = bool(trajectory.ledger["min_separation"].min() < bound)
    if system.n == 2 and trajectory.termination.kind is TerminationKind.COMPLETED:
        exact = two_vortex_solution(system, trajectory.final_time)
        report["closed_form_error"] = float(np.max(np.abs(trajectory.final_positions - exact)))
    if system.n == 3:
        ratios = np.array([pairwise_distance_ratios(x) for x in trajectory.states])
        frame = pd.DataFrame({"t": trajectory.times, "d12_d13": ratios[:, 0], "d23_d13": ratios[:, 1]})
        write_csv(out / "distance_ratios.csv", frame, metadata)
    write_json(out / "checks.json", report, metadata)

    termination = trajectory.termination
    print(f"\n✓ Point-vortex run finished: {termination.kind.value} at t={termination.time:.6g}")
    print(f"  - Accepted steps: {len(trajectory.times) - 1}")
    print(f"  - Hamiltonian drift: {trajectory.max_relative_drift('hamiltonian'):.3e}")
    if termination.collapsed:
        print(f"  - Collapsing pair {termination.pair}, separation {termination.separation:.3e}")
    if termination.kind is TerminationKind.STEP_FAILURE:
        print(f"\n⚠ Integration stopped early: {termination.message}")
        return EXIT_FAILURE
    return EXIT_OK


def run_field(cfg: RunConfig, out: Path, metadata: dict) -> int:
    section = cfg.field
    theta0 = section.initial_field()
    params = section.params()
    stride = cfg.snapshot_stride or section.stride
    record = run(theta0, params, stride=stride, keep_snapshots=cfg.snapshot_stride is not None, show_progress=True)

    write_observables_csv(out / "observables.csv", record.series, metadata)
    write_snapshot(out / "final.gsqg", record.final, record.t_final, params.alpha, params.diss)
    for k, (t, theta) in enumerate(record.snapshots):
        write_snapshot(out / "snapshots" / f"snap_{k:05d}.gsqg", theta, t, params.alpha, params.diss)
    summary = {
        "n": theta0.grid.n,
        "steps": record.steps,
        "dt": record.dt,
        "t_final": record.t_final,
        "gradient_growth_flag": record.gradient_growth_flag,
        "final": record.series.iloc[-1].to_dict(),
    }
    write_json(out / "summary.json", summary, metadata)

    print(f"\n✓ Spectral run finished: n={theta0.grid.n}, {record.steps} steps of dt={record.dt:.4g}")
    if record.gradient_growth_flag:
        print("\n⚠ Gradient growth flag raised; the run may be under-resolved")
    return EXIT_OK


def run_localize(cfg: RunConfig, out: Path, metadata: dict) -> int:
    section = cfg.localize
    pde = section.pde
    if cfg.snapshot_stride is not None:
        pde = pde.model_copy(update={"stride": cfg.snapshot_stride})
    snapshot_dir = out / "snapshots" if section.write_snapshots else None
    runs, summary = run_localization_sweep(
        section.blobs, section.eps_list, section.kappa, section.cutoff(), pde, cfg.threads, snapshot_dir
    )
    for result in runs:
        if result.ok:
            write_csv(out / f"eps_{result.eps:.6g}.csv", result.series, metadata)
    payload = {"sweep": summary, "runs": [{"eps": r.eps, "error": r.error, **(r.summary or {})} for r in runs]}
    write_json(out / "sweep.json", payload, metadata)

    print(f"\n✓ Localization sweep over {len(runs)} eps values")
    print(f"  - Weak-* error decreasing in eps: {summary['monotone_weak_star']}")
    print(f"  - Empirical D: {summary['empirical_D']}")
    if summary["failures"]:
        print(f"\n⚠ {len(summary['failures'])} eps run(s) failed; see sweep.json")
        return EXIT_FAILURE
    return EXIT_OK


def run_mc(cfg: RunConfig, out: Path, metadata: dict) -> int:
    section = cfg.mc
    extra = (collapsing_example(section.alpha),) if section.include_collapse_example else ()
    result = monte_carlo_collapse(
        section.n_samples,
        section.sampler,
        section.t_end,
        section.integrator,
        alpha=section.alpha,
        master_seed=cfg.seed,
        threads=cfg.threads,
        extra_systems=extra,
    )
    export_monte_carlo(result, out, metadata)
    print(f"\n✓ Monte Carlo: {len(result.outcomes)} samples, collapse fraction {result.collapse_fraction:.4g}")
    if result.bound_violations:
        print(f"\n⚠ {result.bound_violations} sample(s) went below the same-sign separation bound")
    failed = result.summary()["failed"]
    if failed:
        print(f"\n⚠ {failed} sample(s) failed; see the message column of samples.csv")
    return EXIT_OK


def run_check(cfg: RunConfig, out: Path, metadata: dict) -> int:
    results = run_checks(cfg.check.scale, cfg.seed, cfg.check.only)
    write_json(out / "check.json", {"scale": cfg.check.scale, "results": [r.to_dict() for r in results]}, metadata)

    width = max(len(r.name) for r in results)
    print()
    for r in results:
        mark = "✓" if r.passed else "⚠"
        value = "" if r.value is None else f"{r.value:.3e}"
        threshold = "" if r.threshold is None else f"<= {r.threshold:.1e}"
        print(f"{mark} {r.name:<{width}}  {value:>10}  {threshold}")
    failed = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)} passed, {len(failed)} failed")
    return EXIT_FAILURE if failed else EXIT_OK


RUNNERS = {"pv": run_pv, "field": run_field, "localize": run_localize, "mc": run_mc, "check": run_check}


def dispatch(cfg: RunConfig) -> int:
    """Run the configured mode and return its exit code."""
    settings.threads = cfg.threads
    out = Path(cfg.output_dir)
    ensure_directories(out)
    metadata = run_metadata(cfg.hashed(), cfg.seed)
    logger.info(f"Mode {cfg.mode}, seed {cfg.seed}, config hash {metadata['config_hash'][:12]}")
    try:
        return RUNNERS[cfg.mode](cfg, out, metadata)
    except GSQGError as e:
        logger.error(f"{cfg.mode} run failed: {e}")
        print(f"\n⚠ {type(e).__name__}: {e}")
        return EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsqg", description="Point vortices, gSQG spectral runs and localization diagnostics"
    )
    subparsers = parser.add_subparsers(dest="mode", required=True, metavar="{" + ",".join(MODES) + "}")
    for mode in MODES:
        sub = subparsers.add_parser(mode, help=f"Run the {mode} mode")
        sub.add_argument("--config", type=str, help="TOML config file or preset name")
        sub.add_argument("--out", type=Path, help="Output directory")
        sub.add_argument("--seed", type=int, help="Master seed (64-bit unsigned)")
        sub.add_argument("--threads", type=int, help="Worker processes")
        sub.add_argument("--snapshot-stride", type=int, help="Record every N-th step and keep snapshots")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    overrides = {
        "mode": args.mode,
        "output_dir": args.out,
        "seed": args.seed,
        "threads": args.threads,
        "snapshot_stride": args.snapshot_stride,
    }
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as e:
        print(f"\n⚠ Invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE

    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
