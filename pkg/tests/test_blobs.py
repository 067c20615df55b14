"""Tests for blob initial data and grid resolution."""

import math

import numpy as np
import pytest

from src.errors import CutoffSupportError, ResolutionError, SupportOverlapError
from src.localization.blobs import (
    BlobSpec,
    bump_chi,
    chi_l1_norm,
    free_coordinates,
    make_blob_initial_data,
    resolve_grid,
)
from src.spectral.field import Grid


def test_chi_norm_matches_riemann_sum():
    h = 1e-3
    x = np.arange(-1.0, 1.0, h) + h / 2
    x1, x2 = np.meshgrid(x, x)
    assert chi_l1_norm() == pytest.approx(float(np.sum(bump_chi(x1**2 + x2**2))) * h * h, rel=1e-5)


def test_bump_support():
    assert bump_chi(np.array([0.0]))[0] == pytest.approx(math.exp(-1.0))
    assert bump_chi(np.array([1.0, 4.0])).tolist() == [0.0, 0.0]


class TestBlobSpec:
    def test_d0_defaults_to_min_distance(self):
        spec = BlobSpec(centers=[(0.0, 0.0), (3.0, 4.0)], intensities=[1.0, 1.0], eps=0.1)
        assert spec.d0 == pytest.approx(5.0)
        assert spec.radius == pytest.approx(0.25)
        assert spec.c1 == pytest.approx(2.5)
        assert spec.support_gap == pytest.approx(4.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            BlobSpec(centers=[(0.0, 0.0)], intensities=[1.0], eps=0.1)
        with pytest.raises(ValueError):
            BlobSpec(centers=[(0.0, 0.0), (1.0, 0.0)], intensities=[1.0, -1.0], eps=0.1)
        with pytest.raises(ValueError):
            BlobSpec(centers=[(0.0, 0.0)], intensities=[1.0], eps=1.5, d0=1.0)
        with pytest.raises(ValueError):
            BlobSpec(centers=[(0.0, 0.0)], intensities=[0.0], eps=0.5, d0=1.0)
        mixed = BlobSpec(centers=[(0.0, 0.0), (1.0, 0.0)], intensities=[1.0, -1.0], eps=0.1, same_sign=False)
        assert mixed.d0 == 1.0

    def test_with_eps_keeps_d0(self):
        spec = BlobSpec(centers=[(0.0, 0.0), (1.0, 0.0)], intensities=[1.0, 2.0], eps=0.5)
        assert spec.with_eps(0.1).d0 == spec.d0
        assert spec.with_eps(0.1).eps == 0.1


class TestResolveGrid:
    def test_eight_points_across(self):
        grid = resolve_grid(0.1, 1.0)
        assert grid.n == 512
        assert grid.dx <= 0.1 / 8

    def test_minimum_size(self):
        assert resolve_grid(1.0, 10.0).n == 16

    def test_cap(self):
        with pytest.raises(ResolutionError):
            resolve_grid(0.1, 1.0, max_n=256)


class TestBlobData:
    def test_masses_and_support(self):
        spec = BlobSpec(centers=[(-0.6, 0.0), (0.6, 0.0)], intensities=[1.0, 2.0], eps=0.5)
        grid = resolve_grid(spec.eps, spec.d0)
        theta = make_blob_initial_data(spec, grid, box_fraction=1.0)
        y1, y2 = free_coordinates(grid)
        left = y1 < 0.0
        assert theta.integral(left.astype(float)) == pytest.approx(1.0, rel=1e-12)
        assert theta.integral((~left).astype(float)) == pytest.approx(2.0, rel=1e-12)
        assert np.all(theta.values >= 0.0)
        outside = np.minimum(np.hypot(y1 + 0.6, y2), np.hypot(y1 - 0.6, y2)) >= spec.radius
        assert np.all(theta.values[outside] == 0.0)
        assert theta.lp_norm(math.inf) <= 1.01 * spec.c2 * 2.0 / spec.eps**2

    def test_under_resolved(self):
        spec = BlobSpec(centers=[(0.0, 0.0)], intensities=[1.0], eps=0.1, d0=1.0)
        with pytest.raises(ResolutionError):
            make_blob_initial_data(spec, Grid(64), box_fraction=1.0)

    def test_overlapping_supports(self):
        spec = BlobSpec(centers=[(-0.25, 0.0), (0.25, 0.0)], intensities=[1.0, 1.0], eps=1.0)
        with pytest.raises(SupportOverlapError):
            make_blob_initial_data(spec, Grid(128), box_fraction=1.0)

    def test_support_leaves_central_box(self):
        spec = BlobSpec(centers=[(0.5, 0.0)], intensities=[1.0], eps=0.5, d0=1.0)
        with pytest.raises(CutoffSupportError):
            make_blob_initial_data(spec, Grid(128), box_fraction=0.125)
