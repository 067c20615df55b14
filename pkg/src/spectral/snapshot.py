"""GSQGFLD1 field snapshots and observable series.

Snapshot layout, little-endian: magic "GSQGFLD1", u32 n, f64 L, f64 t, f64 alpha,
f64 gamma, f64 kappa, then n*n float64 physical values in row-major order (row = x2).
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pandas as pd

from src.artifacts import write_csv
from src.kernels.green import AlphaParam, DissipationParam
from src.spectral.field import Grid, ScalarField

logger = logging.getLogger(__name__)

MAGIC = b"GSQGFLD1"
HEADER = np.dtype(
    [
        ("magic", "S8"),
        ("n", "<u4"),
        ("length", "<f8"),
        ("t", "<f8"),
        ("alpha", "<f8"),
        ("gamma", "<f8"),
        ("kappa", "<f8"),
    ]
)
OBSERVABLE_COLUMNS = ["t", "l1", "l2", "linf", "min", "max", "hamiltonian"]


@dataclass(frozen=True)
class Snapshot:
    field: ScalarField
    t: float
    alpha: float
    gamma: float
    kappa: float


def write_snapshot(
    path: Path, theta: ScalarField, t: float, p: AlphaParam, d: DissipationParam
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.zeros(1, dtype=HEADER)
    header[0] = (MAGIC, theta.grid.n, theta.grid.length, t, p.alpha, d.gamma, d.kappa)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(theta.values, dtype="<f8").tobytes())
    logger.debug(f"Wrote snapshot t={t:.6g} to {path}")
    return path


def read_snapshot(path: Path) -> Snapshot:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.itemsize:
        raise ValueError(f"{path} is too short to hold a snapshot header")
    header = np.frombuffer(raw[: HEADER.itemsize], dtype=HEADER)[0]
    if header["magic"] != MAGIC:
        raise ValueError(f"{path} is not a GSQGFLD1 snapshot")
    n = int(header["n"])
    body = np.frombuffer(raw[HEADER.itemsize :], dtype="<f8")
    if body.size != n * n:
        raise ValueError(f"{path}: expected {n * n} values, found {body.size}")
    grid = Grid(n, float(header["length"]))
    return Snapshot(
        field=ScalarField(grid, values=body.reshape(n, n)),
        t=float(header["t"]),
        alpha=float(header["alpha"]),
        gamma=float(header["gamma"]),
        kappa=float(header["kappa"]),
    )


def write_observables_csv(path: Path, series: pd.DataFrame, metadata: Dict[str, Any]) -> Path:
    """Observable series with the fixed leading columns, extra observer columns after them."""
    extra = [c for c in series.columns if c not in OBSERVABLE_COLUMNS]
    return write_csv(path, series[OBSERVABLE_COLUMNS + extra], metadata)
