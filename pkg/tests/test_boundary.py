import numpy as np
import pytest

from ttkinetic.boundary import (
    BoundaryCondition,
    Problem,
    dense_ghost,
    dense_wall_ghost,
    ghost,
    normal_axis,
    symmetry_ghost,
    wall_density,
    wall_ghost,
)
from ttkinetic.meshgen import box_mesh
from ttkinetic.physics import StateError, argon, maxwell_tt
from ttkinetic.tt import tt_dot, tt_rank1
from ttkinetic.velocity import build_grid, xi_normal_split

GAS = argon()


@pytest.fixture(scope="module")
def grid():
    return build_grid(24, 2000.0)


def test_condition_validation(grid):
    m = maxwell_tt(1e20, 300.0, [0, 0, 0], grid, GAS)
    with pytest.raises(ValueError, match="unknown boundary kind"):
        BoundaryCondition("inlet")
    with pytest.raises(ValueError):
        BoundaryCondition("wall")
    with pytest.raises(ValueError):
        BoundaryCondition("wall", T_w=-5.0)
    with pytest.raises(ValueError):
        BoundaryCondition("in")
    with pytest.raises(ValueError, match="rank-1"):
        BoundaryCondition("out", f_stream=m + m)
    assert BoundaryCondition("sym-y").sym_axis == 1
    assert BoundaryCondition("wall", T_w=300.0).sym_axis is None


def test_problem_checks(grid):
    m = maxwell_tt(1e20, 300.0, [0, 0, 0], grid, GAS)
    with pytest.raises(ValueError):
        Problem(["wall", "in"], [300.0], lambda c: m)
    p = Problem(["in", "wall"], [m, 300.0], lambda c: m)
    assert [c.kind for c in p.conditions] == ["in", "wall"]
    assert p.conditions[1].T_w == 300.0
    mesh = box_mesh((1, 1, 1), (1, 1, 1), [("a", ["xmin"]), ("b", ["xmax"]),
                                          ("c", ["ymin", "ymax", "zmin", "zmax"])])
    with pytest.raises(ValueError, match="3 boundary groups"):
        p.check_mesh(mesh)


def test_normal_axis():
    assert normal_axis([0.0, -1.0, 0.0]) == 1
    with pytest.raises(ValueError):
        normal_axis(np.array([1.0, 1.0, 0.0]) / np.sqrt(2))


def test_symmetry_mirror(grid):
    f = maxwell_tt(1e20, 300.0, [200.0, -100.0, 50.0], grid, GAS)
    for ax in range(3):
        g = symmetry_ghost(f, ax)
        np.testing.assert_allclose(g.full(), np.flip(f.full(), axis=ax), rtol=1e-14)
    normal = [0.0, 1.0, 0.0]
    g = ghost(BoundaryCondition("sym-y"), f, grid, GAS, normal)
    np.testing.assert_allclose(g.full(), np.flip(f.full(), axis=1), rtol=1e-14)
    # mirrored state carries no normal mass flux across the plane
    plus, minus = xi_normal_split(grid, normal)
    assert tt_dot(plus, f) + tt_dot(minus, g) == pytest.approx(0.0, abs=1e-12 * tt_dot(plus, f))
    with pytest.raises(ValueError):
        ghost(BoundaryCondition("sym-x"), f, grid, GAS, normal)


@pytest.mark.parametrize("normal", [(1.0, 0.0, 0.0), (0.0, 0.0, -1.0), (0.6, 0.8, 0.0), (0.48, 0.6, 0.64)])
def test_wall_impermeable(grid, normal):
    f = maxwell_tt(1e20, 400.0, [150.0, -80.0, 40.0], grid, GAS)
    g = wall_ghost(f, 300.0, grid, GAS, normal)
    assert g.ranks == (1, 1, 1, 1)
    plus, minus = xi_normal_split(grid, normal)
    out = tt_dot(plus, f)
    assert out + tt_dot(minus, g) == pytest.approx(0.0, abs=1e-12 * out)


def test_wall_at_rest_equilibrium_is_fixed_point(grid):
    f = maxwell_tt(3e20, 300.0, [0, 0, 0], grid, GAS)
    assert wall_density(f, 300.0, grid, GAS, [1.0, 0, 0]) == pytest.approx(3e20, rel=1e-12)
    np.testing.assert_allclose(wall_ghost(f, 300.0, grid, GAS, [0, -1.0, 0]).full(), f.full(), rtol=1e-12)


def test_wall_matches_dense(grid):
    f = maxwell_tt(1e20, 400.0, [150.0, -80.0, 40.0], grid, GAS)
    n = [0.0, 1.0, 0.0]
    np.testing.assert_allclose(
        wall_ghost(f, 300.0, grid, GAS, n).full(), dense_wall_ghost(f.full(), 300.0, grid, GAS, n), rtol=1e-11
    )
    bc = BoundaryCondition("wall", T_w=300.0)
    np.testing.assert_allclose(dense_ghost(bc, f.full(), grid, GAS, n), ghost(bc, f, grid, GAS, n).full(), rtol=1e-11)


def test_wall_without_outgoing_molecules(grid):
    e = np.zeros(grid.n)
    e[0] = 1.0  # all molecules move towards -x, away from an x+ wall
    one = np.zeros(grid.n)
    one[grid.n // 2] = 1.0
    f = tt_rank1(e, one, one)
    with pytest.raises(StateError, match="wall density"):
        wall_ghost(f, 300.0, grid, GAS, [1.0, 0.0, 0.0])


def test_freestream_ghost(grid):
    m = maxwell_tt(1e20, 300.0, [500.0, 0, 0], grid, GAS)
    f = maxwell_tt(2e20, 200.0, [0, 0, 0], grid, GAS)
    bc = BoundaryCondition("in", f_stream=m)
    assert ghost(bc, f, grid, GAS, [-1.0, 0, 0]) is m
    np.testing.assert_array_equal(dense_ghost(bc, f.full(), grid, GAS, [-1.0, 0, 0]), m.full())
