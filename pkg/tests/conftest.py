"""Shared fixtures.  The two reference solves (LiH spheres at R = 30 and
R = 40 nm, grid_div = 10) are expensive, so they are built once per session
and reused by the solver, transition, CLI, and acceptance tests."""

import pytest

from nqdot.bulk import bulk_properties
from nqdot.geometry import GeometrySpec, build_grid
from nqdot.materials import load_material
from nqdot.nuclides import default_table
from nqdot.solver import Coupling, solve_bound_states


@pytest.fixture(scope="session")
def table():
    return default_table()


@pytest.fixture(scope="session")
def lih():
    comp, lattice = load_material("LiH")
    return comp


@pytest.fixture(scope="session")
def lih_lattice():
    _comp, lattice = load_material("LiH")
    return lattice


@pytest.fixture(scope="session")
def lih_bulk(lih):
    return bulk_properties(lih)


class SphereSolve:
    def __init__(self, comp, radius, grid_div=10, max_states=12, **kw):
        self.grid = build_grid(GeometrySpec.sphere(radius, grid_div))
        self.coupling = Coupling.from_composition(comp, self.grid)
        self.states = solve_bound_states(
            self.grid, self.coupling, max_states=max_states, **kw
        )

    def group(self, label):
        return [s for s in self.states if s.level_label == label]


@pytest.fixture(scope="session")
def r30(lih):
    """LiH sphere R = 30 nm, grid_div = 10: hosts 1s and the 1p triple."""
    return SphereSolve(lih, 30.0, max_states=8)


@pytest.fixture(scope="session")
def r40(lih):
    """LiH sphere R = 40 nm, grid_div = 10: full 1s/1p/1d/1d/2s structure."""
    return SphereSolve(lih, 40.0, max_states=12)
