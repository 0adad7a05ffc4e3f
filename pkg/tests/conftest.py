import numpy as np
import pytest

from ttkinetic.boundary import Problem
from ttkinetic.meshgen import box_mesh, cylinder_arrays
from ttkinetic.mesh import build_mesh
from ttkinetic.physics import argon, maxwell_tt
from ttkinetic.velocity import build_grid


@pytest.fixture(scope="session")
def gas():
    return argon()


def uniform_stream_problem(mesh, grid, gas, n=1e20, T=300.0, u=(200.0, 0.0, 0.0)):
    """Free stream everywhere: every in/out group carries the initial Maxwellian."""
    f0 = maxwell_tt(n, T, u, grid, gas)
    kinds = [name if name.startswith("sym") else "in" for name in mesh.group_names]
    data = [f0 if k == "in" else None for k in kinds]
    return Problem(kinds, data, lambda c: f0), f0


@pytest.fixture(scope="session")
def small_cylinder_mesh():
    return build_mesh(*cylinder_arrays(1.0, 4.0, 3, 6, 0.3, growth=1.3))


@pytest.fixture(scope="session")
def grid16(gas):
    return build_grid(16, 200.0 + 4.5 * np.sqrt(2 * gas.R_g * 300.0))


@pytest.fixture(scope="session")
def channel():
    return box_mesh(
        (4, 1, 1), (4.0, 1.0, 1.0),
        [("in", ["xmin"]), ("out", ["xmax"]), ("sym-y", ["ymin", "ymax"]), ("sym-z", ["zmin", "zmax"])],
    )
