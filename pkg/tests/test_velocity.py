import numpy as np
import pytest

from ttkinetic.velocity import (
    abs_xi_normal_estimate,
    build_grid,
    xi_normal,
    xi_normal_split,
    xi_tensor,
)


def test_grid_nodes_symmetric():
    g = build_grid(4, 3.0)
    np.testing.assert_allclose(g.nodes, [-3.0, -1.0, 1.0, 3.0])
    assert g.delta_xi == pytest.approx(2.0)
    assert g.cell_volume == pytest.approx(8.0)
    assert g.shape == (4, 4, 4)
    assert g.max_speed == pytest.approx(3.0 * np.sqrt(3.0))


def test_grid_rejects_bad_input():
    for n, b in [(1, 1.0), (2.5, 1.0), (8, 0.0), (8, -1.0)]:
        with pytest.raises(ValueError):
            build_grid(n, b)


def test_xi_tensor_values():
    g = build_grid(5, 2.0)
    for ax in range(3):
        d = xi_tensor(g, ax).full()
        assert xi_tensor(g, ax).ranks == (1, 1, 1, 1)
        np.testing.assert_allclose(d, g.mesh()[ax])
    with pytest.raises(ValueError):
        xi_tensor(g, 3)


def test_xi_normal():
    g = build_grid(8, 1.0)
    x1, x2, x3 = g.mesh()
    n = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    t = xi_normal(g, n)
    assert max(t.ranks) <= 2
    np.testing.assert_allclose(t.full(), n[0] * x1 + n[1] * x2, atol=1e-14)
    np.testing.assert_allclose(xi_normal(g, [0, 0, -1]).full(), -x3)
    with pytest.raises(ValueError):
        xi_normal(g, [1.0, 1.0, 0.0])


def test_abs_estimate_aligned_exact():
    g = build_grid(16, 1.0)
    for ax in range(3):
        n = np.zeros(3)
        n[ax] = -1.0
        e = abs_xi_normal_estimate(g, n)
        assert e.ranks == (1, 1, 1, 1)
        np.testing.assert_allclose(e.full(), np.abs(g.mesh()[ax]))


@pytest.mark.parametrize("cap, ceiling", [(4, 0.10), (10, 0.03)])
@pytest.mark.parametrize("n", [(1.0, 1.0, 0.0), (1.0, 1.0, 1.0), (0.3, -0.5, 0.8)])
def test_abs_estimate_oblique(n, cap, ceiling):
    g = build_grid(32, 1.0)
    n = np.asarray(n) / np.linalg.norm(n)
    x1, x2, x3 = g.mesh()
    exact = np.abs(n[0] * x1 + n[1] * x2 + n[2] * x3)
    e = abs_xi_normal_estimate(g, n, cap_rank=cap)
    assert max(e.ranks) <= cap
    est = e.full()
    assert np.all(est >= exact + 0.99e-9 * exact.max())
    assert np.linalg.norm(est - exact) <= ceiling * np.linalg.norm(exact)


def test_split_adds_to_xi_n():
    g = build_grid(16, 1.0)
    n = np.array([0.6, 0.0, 0.8])
    plus, minus = xi_normal_split(g, n)
    xn = xi_normal(g, n).full()
    np.testing.assert_allclose(plus.full() + minus.full(), xn, atol=1e-12)
    assert plus.full().min() >= -1e-12
    assert minus.full().max() <= 1e-12


def test_split_aligned_half_ranges():
    g = build_grid(6, 1.0)
    plus, minus = xi_normal_split(g, [1.0, 0.0, 0.0])
    x1 = g.mesh()[0]
    np.testing.assert_array_equal(plus.full(), np.maximum(x1, 0))
    np.testing.assert_array_equal(minus.full(), np.minimum(x1, 0))


def test_cache_returns_same_object():
    g = build_grid(8, 1.0)
    assert xi_normal(g, [0, 1, 0]) is xi_normal(g, [0, 1, 0])
    n = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    assert abs_xi_normal_estimate(g, n) is abs_xi_normal_estimate(g, n)


def test_two_node_grid():
    g = build_grid(2, 1.0)
    np.testing.assert_array_equal(g.nodes, [-1.0, 1.0])
    assert g.delta_xi == 2.0


def test_maxwellian_density_quadrature_64():
    from ttkinetic.cases import CYLINDER_T0, CYLINDER_V0, cylinder_gas
    from ttkinetic.physics import maxwell_tt

    gas = cylinder_gas()
    g = build_grid(64, CYLINDER_V0 + 4.5 * np.sqrt(2 * gas.R_g * 5 * CYLINDER_T0))
    assert g.n == 64
    m = maxwell_tt(2e23, CYLINDER_T0, [CYLINDER_V0, 0, 0], g, gas)
    assert g.integrate(m) == pytest.approx(2e23, rel=1e-3)


def test_xi_normal_body_diagonal():
    g = build_grid(10, 2.0)
    x1, x2, x3 = g.mesh()
    t = xi_normal(g, np.ones(3) / np.sqrt(3))
    assert max(t.ranks) <= 2
    np.testing.assert_allclose(t.full(), (x1 + x2 + x3) / np.sqrt(3), rtol=0, atol=1e-13)


def test_positive_part_half_range_density():
    from ttkinetic.physics import argon, maxwell_dense, maxwell_tt
    from ttkinetic.tt import tt_dot
    from ttkinetic.velocity import xi_normal_positive_part

    gas = argon()
    g = build_grid(32, 2630.0 + 4.5 * np.sqrt(2 * gas.R_g * 1000.0))
    n = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    x1, x2, x3 = g.mesh()
    xn = n[0] * x1 + n[1] * x2
    plus = xi_normal_positive_part(g, n)
    # a stream crossing the face: the kink of |xi_n| sits in the tail
    u = [2630.0, 0.0, 0.0]
    est = tt_dot(plus, maxwell_tt(1e20, 200.0, u, g, gas))
    exact = np.sum(np.maximum(xn, 0) * maxwell_dense(1e20, 200.0, u, g, gas))
    assert est == pytest.approx(exact, rel=0.02)
    # gas at rest: thermal speed below the node spacing, the estimate only bounds
    est = tt_dot(plus, maxwell_tt(1e20, 200.0, [0, 0, 0], g, gas))
    exact = np.sum(np.maximum(xn, 0) * maxwell_dense(1e20, 200.0, [0, 0, 0], g, gas))
    assert est >= exact
