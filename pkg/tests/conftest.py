"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from src.spectral.field import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid64():
    return Grid(64)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path
