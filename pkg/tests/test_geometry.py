import math

import numpy as np
import pytest

from nqdot.errors import UnboundedImageSet
from nqdot.geometry import GeometrySpec, Grid, build_grid, periodic_displacements


def test_sphere_point_count_near_volume_estimate():
    grid = build_grid(GeometrySpec.sphere(30.0, 10))
    expected = 4.0 / 3.0 * math.pi * 10**3  # ~4189
    assert abs(grid.n_points - expected) / expected < 0.10
    assert grid.spacing == pytest.approx(3.0)
    assert grid.periodic_axes == ()


def test_sphere_points_inside_and_distinct():
    grid = build_grid(GeometrySpec.sphere(30.0, 10))
    radii = np.linalg.norm(grid.points, axis=1)
    assert radii.max() <= 30.0 + 1e-12
    assert len(np.unique(grid.points, axis=0)) == grid.n_points


def test_sphere_centered_and_symmetric():
    grid = build_grid(GeometrySpec.sphere(1.0, 10))
    assert grid.spacing == pytest.approx(0.1)
    assert grid.n_points > 0
    pts = {tuple(np.round(p, 12)) for p in grid.points}
    assert {tuple(np.round(-p, 12)) for p in grid.points} == pts
    assert (0.0, 0.0, 0.0) in pts


def test_slab_column():
    grid = build_grid(GeometrySpec.slab(10.0, 10))
    assert grid.n_points == 10
    assert grid.spacing == pytest.approx(1.0)
    assert len(grid.periodic_axes) == 2
    assert np.allclose(grid.points[:, :2], 0.0)
    zs = np.sort(grid.points[:, 2])
    assert zs[0] == pytest.approx(-4.5)
    assert zs[-1] == pytest.approx(4.5)
    # cells tile the thickness exactly and the column is centered
    assert np.allclose(np.diff(zs), 1.0)
    assert abs(zs.sum()) < 1e-12


def test_cylinder_single_layer():
    grid = build_grid(GeometrySpec.cylinder(40.0, 10))
    assert np.allclose(grid.points[:, 2], 0.0)
    assert grid.periodic_axes == ((2, 4.0),)
    rho = np.hypot(grid.points[:, 0], grid.points[:, 1])
    assert rho.max() <= 40.0 + 1e-12
    expected = math.pi * 10**2
    assert abs(grid.n_points - expected) / expected < 0.10


def test_spec_validation():
    with pytest.raises(ValueError):
        GeometrySpec.sphere(0.0, 10)
    with pytest.raises(ValueError):
        GeometrySpec.sphere(10.0, 3)
    with pytest.raises(ValueError):
        GeometrySpec("cube", 1.0, 10)


def test_displacement_range_example():
    grid = build_grid(GeometrySpec.cylinder(40.0, 10))
    grid = Grid(points=grid.points, spacing=4.0, periodic_axes=((2, 4.0),), spec=None)
    out = periodic_displacements(grid, kappa=0.07, tol=1e-10)
    # n_max = floor(ln(1e10) / (0.07 * 4)) = 82
    ns = sorted(int(round(v[2] / 4.0)) for v, _w in out)
    assert ns[0] == -82 and ns[-1] == 82
    assert 0 not in ns
    assert len(ns) == 164


def test_displacement_tol_one_empty():
    grid = build_grid(GeometrySpec.slab(10.0, 10))
    assert periodic_displacements(grid, kappa=0.5, tol=1.0) == []


def test_displacements_closed_under_negation():
    grid = build_grid(GeometrySpec.slab(10.0, 10))
    out = periodic_displacements(grid, kappa=0.9, tol=1e-6)
    vecs = {tuple(np.round(v, 12)) for v, _w in out}
    assert {tuple(np.round(-np.asarray(v), 12)) for v in vecs} == vecs


def test_displacements_need_positive_kappa():
    grid = build_grid(GeometrySpec.slab(10.0, 10))
    with pytest.raises(UnboundedImageSet):
        periodic_displacements(grid, kappa=0.0, tol=1e-10)
