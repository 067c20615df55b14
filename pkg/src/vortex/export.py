"""Trajectory and Monte Carlo artifacts."""

import logging
from pathlib import Path
from typing import Any, Dict

import pandas as pd

from src.artifacts import write_csv, write_json
from src.vortex.integrator import Trajectory
from src.vortex.montecarlo import MonteCarloResult

logger = logging.getLogger(__name__)


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """One row per accepted step: t, x{i}_1, x{i}_2 for every vortex, then the ledger."""
    columns = {"t": trajectory.times}
    for i in range(trajectory.system.n):
        columns[f"x{i}_1"] = trajectory.states[:, i, 0]
        columns[f"x{i}_2"] = trajectory.states[:, i, 1]
    frame = pd.DataFrame(columns)
    ledger = trajectory.ledger.drop(columns=["t"])
    return pd.concat([frame, ledger], axis=1)


def trajectory_summary(trajectory: Trajectory) -> Dict[str, Any]:
    return {
        "n_vortices": trajectory.system.n,
        "alpha": trajectory.system.alpha.alpha,
        "intensities": trajectory.system.intensities,
        "eps_reg": trajectory.eps_reg,
        "accepted_steps": len(trajectory.times) - 1,
        "rejected_steps": trajectory.rejected_steps,
        "termination": trajectory.termination.to_dict(),
        "drift": {
            "hamiltonian": trajectory.max_relative_drift("hamiltonian"),
            "m1": trajectory.max_relative_drift("m1"),
            "m2": trajectory.max_relative_drift("m2"),
            "inertia": trajectory.max_relative_drift("inertia"),
        },
        "final_min_separation": float(trajectory.ledger["min_separation"].iloc[-1]),
    }


def export_trajectory(trajectory: Trajectory, out_dir: Path, metadata: Dict[str, Any]) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    return {
        "trajectory": write_csv(out_dir / "trajectory.csv", trajectory_frame(trajectory), metadata),
        "summary": write_json(out_dir / "summary.json", trajectory_summary(trajectory), metadata),
    }


def export_monte_carlo(result: MonteCarloResult, out_dir: Path, metadata: Dict[str, Any]) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    return {
        "samples": write_csv(out_dir / "samples.csv", result.to_frame(), metadata),
        "summary": write_json(out_dir / "summary.json", result.summary(), metadata),
    }
