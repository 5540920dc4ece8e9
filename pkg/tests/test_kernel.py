import math

import numpy as np
import pytest

from nqdot.geometry import GeometrySpec, Grid, build_grid
from nqdot.kernel import assemble_kernel, assemble_kernel_direct
from nqdot.solver import Coupling, branch_scan


def two_point_grid(distance):
    pts = np.array([[0.0, 0.0, 0.0], [distance, 0.0, 0.0]])
    return Grid(points=pts, spacing=distance, periodic_axes=())


def test_two_point_kernel():
    k = assemble_kernel(two_point_grid(1.0), kappa=1.0)
    assert k[0, 0] == 0.0 and k[1, 1] == 0.0
    assert k[0, 1] == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert k[1, 0] == k[0, 1]


def test_aperiodic_translation_invariance():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-5, 5, (40, 3))
    g1 = Grid(points=pts, spacing=1.0, periodic_axes=())
    g2 = Grid(points=pts + np.array([11.0, -4.0, 7.0]), spacing=1.0, periodic_axes=())
    k1 = assemble_kernel(g1, 0.7)
    k2 = assemble_kernel(g2, 0.7)
    assert np.max(np.abs(k1 - k2)) < 1e-11


@pytest.mark.parametrize("kappa", [2.0, 0.8])
def test_slab_kernel_matches_direct_sum(kappa):
    grid = build_grid(GeometrySpec.slab(10.0, 10))
    k_fast = assemble_kernel(grid, kappa)
    k_ref = assemble_kernel_direct(grid, kappa, tol=1e-16)
    assert k_fast.dtype == np.float64
    assert np.max(np.abs(k_fast - k_ref)) < 1e-11


def test_slab_kernel_bloch_matches_direct_sum():
    grid = build_grid(GeometrySpec.slab(10.0, 10))
    k_vec = np.array([0.9, -0.4, 0.0])
    k_fast = assemble_kernel(grid, 1.5, k_vec)
    k_ref = assemble_kernel_direct(grid, 1.5, k_vec, tol=1e-16)
    assert np.max(np.abs(k_fast - k_ref)) < 1e-11


@pytest.mark.parametrize("kappa", [2.0, 0.6])
def test_wire_kernel_matches_direct_sum(kappa):
    grid = build_grid(GeometrySpec.cylinder(5.0, 5))
    k_fast = assemble_kernel(grid, kappa)
    k_ref = assemble_kernel_direct(grid, kappa, tol=1e-16)
    assert np.max(np.abs(k_fast - k_ref)) < 1e-11


def test_random_periodic_grids_complex_hermitian():
    """Random multi-layer periodic grids produce genuinely complex kernels;
    the resummed forms must match direct summation and stay Hermitian."""
    rng = np.random.default_rng(0)
    pts_w = np.column_stack(
        [rng.uniform(-2, 2, 8), rng.uniform(-2, 2, 8), rng.uniform(0, 1.0, 8)]
    )
    wire = Grid(points=pts_w, spacing=1.0, periodic_axes=((2, 1.0),))
    kv = np.array([0.0, 0.0, 0.7])
    k_fast = assemble_kernel(wire, 0.9, kv)
    k_ref = assemble_kernel_direct(wire, 0.9, kv, tol=1e-16)
    assert np.iscomplexobj(k_ref)
    assert np.max(np.abs(k_fast - k_ref)) < 1e-11

    pts_s = np.column_stack(
        [rng.uniform(0, 1, 8), rng.uniform(0, 1, 8), rng.uniform(-3, 3, 8)]
    )
    slab = Grid(points=pts_s, spacing=1.0, periodic_axes=((0, 1.0), (1, 1.0)))
    kv = np.array([0.5, -0.3, 0.0])
    k_fast = assemble_kernel(slab, 0.8, kv)
    k_ref = assemble_kernel_direct(slab, 0.8, kv, tol=1e-16)
    assert np.max(np.abs(k_fast - k_ref)) < 1e-11
    assert np.max(np.abs(k_ref - k_ref.conj().T)) < 1e-12


def test_bloch_k_zero_is_real():
    grid = build_grid(GeometrySpec.slab(10.0, 10))
    k = assemble_kernel(grid, 0.4, np.zeros(3))
    assert k.dtype == np.float64


def test_bloch_k_restricted_to_periodic_axes():
    grid = build_grid(GeometrySpec.slab(10.0, 10))
    with pytest.raises(ValueError):
        assemble_kernel(grid, 0.4, np.array([0.0, 0.0, 0.1]))


def test_tiny_kappa_periodic_kernels_are_finite():
    # direct summation would need ~7600 image shells here
    slab = build_grid(GeometrySpec.slab(2.0, 10))
    k = assemble_kernel(slab, 0.0022)
    assert np.all(np.isfinite(k))
    wire = build_grid(GeometrySpec.cylinder(5.0, 5))
    k = assemble_kernel(wire, 0.0022)
    assert np.all(np.isfinite(k))


def test_top_eigenvalue_strictly_decreasing_in_kappa():
    rng = np.random.default_rng(7)
    for _ in range(3):
        pts = rng.uniform(-4, 4, (60, 3))
        grid = Grid(points=pts, spacing=1.0, periodic_axes=())
        tops = []
        for kappa in np.geomspace(0.05, 3.0, 12):
            tops.append(np.linalg.eigvalsh(assemble_kernel(grid, kappa))[-1])
        assert all(a > b for a, b in zip(tops, tops[1:]))


def test_branch_values_linear_in_coupling(lih):
    grid = build_grid(GeometrySpec.sphere(6.0, 6))
    c_full = Coupling.from_composition(lih, grid)
    c_tiny = Coupling(c=c_full.c * 1e-3, spacing=c_full.spacing)
    kw = dict(kappa_range=(0.02, 0.3), n_samples=5, m_branches=3)
    full = branch_scan(grid, c_full, **kw)
    tiny = branch_scan(grid, c_tiny, **kw)
    for (k1, lam1), (k2, lam2) in zip(full.samples, tiny.samples):
        assert k1 == k2
        assert np.allclose(lam2, lam1 * 1e-3, rtol=1e-12)
