"""Tests for field snapshots and observable series."""

import numpy as np
import pandas as pd
import pytest

from src.artifacts import read_csv
from src.kernels.green import DissipationParam, as_alpha
from src.spectral.field import Grid, ScalarField
from src.spectral.snapshot import HEADER, MAGIC, read_snapshot, write_observables_csv, write_snapshot


def test_header_layout():
    assert HEADER.itemsize == 8 + 4 + 5 * 8


def test_snapshot_preserves_field_and_parameters(tmp_path):
    grid = Grid(16, length=3.0)
    values = np.random.default_rng(2).normal(size=(16, 16))
    path = write_snapshot(
        tmp_path / "s.gsqg", ScalarField(grid, values=values), 0.25, as_alpha(0.5), DissipationParam(gamma=1.0, kappa=1e-3)
    )
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert len(raw) == HEADER.itemsize + 16 * 16 * 8

    snap = read_snapshot(path)
    np.testing.assert_array_equal(snap.field.values, values)
    assert snap.field.grid == grid
    assert (snap.t, snap.alpha, snap.gamma, snap.kappa) == (0.25, 0.5, 1.0, 1e-3)


def test_rejects_foreign_and_truncated_files(tmp_path):
    bad = tmp_path / "bad.gsqg"
    bad.write_bytes(b"NOTASNAP" + bytes(60))
    with pytest.raises(ValueError):
        read_snapshot(bad)
    bad.write_bytes(b"GSQG")
    with pytest.raises(ValueError):
        read_snapshot(bad)

    grid = Grid(16)
    good = write_snapshot(tmp_path / "g.gsqg", ScalarField.zeros(grid), 0.0, as_alpha(0.0), DissipationParam())
    good.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_snapshot(good)


def test_observables_csv_column_order(tmp_path):
    series = pd.DataFrame(
        {"max_grad": [1.0], "hamiltonian": [2.0], "t": [0.0], "l1": [1.0], "l2": [1.0], "linf": [1.0], "min": [0.0], "max": [1.0]}
    )
    frame, metadata = read_csv(write_observables_csv(tmp_path / "obs.csv", series, {"seed": 1}))
    assert list(frame.columns) == ["t", "l1", "l2", "linf", "min", "max", "hamiltonian", "max_grad"]
    assert metadata["seed"] == "1"
