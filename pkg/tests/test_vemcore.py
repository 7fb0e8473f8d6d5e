import numpy as np
import pytest

from src.errors import ConfigError
from src.mesh import polygon_geometry
from src.polyquad import l2_project_function, polygon_quadrature, scaled_basis
from src.study.rates import estimate_rate
from src.vem.element import stabilization
from src.vem import (
    OrderPair,
    build_grad_projection,
    build_l2_projection_of_vh,
    build_projector_nabla,
    dof_layout,
    interpolate,
    local_element,
    local_load,
    local_stiffness,
    stabilization_ratio,
)

from tests.conftest import HEXAGON_CELL, UNIT_SQUARE_CELL, regular_polygon


def monomial_field(cell, k, index):
    basis = scaled_basis(polygon_geometry(cell), k)
    return lambda p: basis.values(np.atleast_2d(p))[:, index]


def quadratic(p):
    p = np.atleast_2d(p)
    return 0.7 - p[:, 0] + 2.0 * p[:, 1] + 0.4 * p[:, 0] ** 2 - 1.1 * p[:, 0] * p[:, 1]


@pytest.mark.parametrize(
    ("cell", "k", "m", "n_dofs"),
    [(UNIT_SQUARE_CELL, 1, 0, 5), (UNIT_SQUARE_CELL, 2, 0, 9), (HEXAGON_CELL, 3, 1, 21)],
)
def test_dof_counts(cell, k, m, n_dofs):
    assert dof_layout(cell, OrderPair(k, m)).n_dofs == n_dofs


def test_order_pair_range():
    OrderPair(4, 2)
    with pytest.raises(ConfigError):
        OrderPair(3, 0)
    with pytest.raises(ConfigError):
        OrderPair(2, 3)
    with pytest.raises(ConfigError):
        OrderPair(5, 5).check_supported()


def test_boundary_nodes_follow_the_edges():
    layout = dof_layout(UNIT_SQUARE_CELL, OrderPair(2, 1))
    np.testing.assert_allclose(layout.boundary_nodes[:4], [[0, 0], [0.5, 0], [1, 0], [1, 0.5]])
    assert list(layout.edge_dofs[3]) == [6, 7, 0]


def test_projector_identities(cell, orders):
    D, B, G, Pi_star, Pi = build_projector_nabla(cell, orders)
    scale = np.linalg.norm(G)
    np.testing.assert_allclose(B @ D, G, atol=1e-10 * scale)
    np.testing.assert_allclose(Pi_star @ D, np.eye(orders.n_k), atol=1e-10)
    np.testing.assert_allclose(Pi @ Pi, Pi, atol=1e-10 * max(1.0, np.linalg.norm(Pi)))


def test_projector_reproduces_monomials(cell, orders):
    index = orders.n_k - 1
    dofs = interpolate(cell, orders, monomial_field(cell, orders.k, index))
    _, _, _, Pi_star, _ = build_projector_nabla(cell, orders)
    expected = np.zeros(orders.n_k)
    expected[index] = 1.0
    np.testing.assert_allclose(Pi_star @ dofs, expected, atol=1e-11)


def test_projector_of_constant():
    orders = OrderPair(2, 1)
    dofs = interpolate(HEXAGON_CELL, orders, lambda p: np.full(len(p), 3.0))
    _, _, _, Pi_star, _ = build_projector_nabla(HEXAGON_CELL, orders)
    np.testing.assert_allclose(Pi_star @ dofs, [3.0, 0, 0, 0, 0, 0], atol=1e-12)


def test_projector_matches_energy_moments():
    orders = OrderPair(2, 2)
    ops = local_element(HEXAGON_CELL, orders)
    v = np.random.default_rng(0).standard_normal(ops.Pi.shape[0])
    coeffs = ops.Pi_star @ v
    basis = ops.context.basis
    rule = polygon_quadrature(HEXAGON_CELL, 4)
    grads = basis.gradients(rule.points)
    grad_p = np.einsum("qai,a->qi", grads, coeffs)
    lhs = np.einsum("q,qi,qai->a", rule.weights, grad_p, grads)
    np.testing.assert_allclose(lhs[1:], (ops.B @ v)[1:], atol=1e-11)


def test_l2_projection_reproduces_polynomials(cell, orders):
    field = monomial_field(cell, orders.k, orders.n_k - 1)
    dofs = interpolate(cell, orders, field)
    _, _, _, Pi_star, _ = build_projector_nabla(cell, orders)
    P0 = build_l2_projection_of_vh(cell, orders, Pi_star)
    expected = np.zeros(orders.n_k)
    expected[-1] = 1.0
    np.testing.assert_allclose(P0 @ dofs, expected, atol=1e-11)


def test_l2_projection_with_full_moments_reads_the_dofs():
    orders = OrderPair(2, 2)
    ops = local_element(HEXAGON_CELL, orders)
    v = np.random.default_rng(1).standard_normal(ops.Pi.shape[0])
    n_b = ops.context.dofmap.n_boundary
    # Projection uses the internal moments only when m = k.
    w = v.copy()
    w[:n_b] += 1.0
    np.testing.assert_allclose(ops.Pi0k_star @ v, ops.Pi0k_star @ w, atol=1e-12)


def test_gradient_projection_of_a_linear():
    orders = OrderPair(2, 1)
    h = polygon_geometry(HEXAGON_CELL).h_K
    dofs = interpolate(HEXAGON_CELL, orders, monomial_field(HEXAGON_CELL, 2, 1))
    gx, gy = build_grad_projection(HEXAGON_CELL, orders)
    np.testing.assert_allclose(gx @ dofs, [1.0 / h, 0.0, 0.0], atol=1e-11)
    np.testing.assert_allclose(gy @ dofs, [0.0, 0.0, 0.0], atol=1e-11)


def test_gradient_projection_of_constant_vanishes(orders):
    dofs = interpolate(UNIT_SQUARE_CELL, orders, lambda p: np.full(len(p), -2.5))
    gx, gy = build_grad_projection(UNIT_SQUARE_CELL, orders)
    np.testing.assert_allclose(gx @ dofs, 0.0, atol=1e-11)
    np.testing.assert_allclose(gy @ dofs, 0.0, atol=1e-11)


def test_gradient_projection_is_exact_on_polynomials(cell, orders):
    if orders.k < 2:
        pytest.skip("needs a quadratic")
    dofs = interpolate(cell, orders, quadratic)
    gx, gy = build_grad_projection(cell, orders)
    expected_x = l2_project_function(lambda p: -1.0 + 0.8 * p[:, 0] - 1.1 * p[:, 1], cell, orders.k - 1)
    expected_y = l2_project_function(lambda p: 2.0 - 1.1 * p[:, 0], cell, orders.k - 1)
    np.testing.assert_allclose(gx @ dofs, expected_x, atol=1e-10)
    np.testing.assert_allclose(gy @ dofs, expected_y, atol=1e-10)


def test_stiffness_kernel_is_the_constants(cell, orders):
    K = local_stiffness(cell, orders)
    np.testing.assert_array_equal(K, K.T)
    ones = interpolate(cell, orders, lambda p: np.ones(len(p)))
    np.testing.assert_allclose(K @ ones, 0.0, atol=1e-11)
    eig = np.linalg.eigvalsh(K)
    assert eig[0] > -1e-9 * eig[-1]
    assert abs(eig[0]) <= 1e-9 * eig[-1]
    assert eig[1] > 1e-9 * eig[-1]


def test_stiffness_is_consistent_on_polynomials(cell, orders):
    if orders.k < 2:
        pytest.skip("needs a quadratic")
    dofs = interpolate(cell, orders, quadratic)
    K = local_stiffness(cell, orders)
    rule = polygon_quadrature(cell, 4)
    x, y = rule.points[:, 0], rule.points[:, 1]
    gx = -1.0 + 0.8 * x - 1.1 * y
    gy = 2.0 - 1.1 * x
    energy = rule.integrate(gx**2 + gy**2)
    assert dofs @ K @ dofs == pytest.approx(energy, rel=1e-10)


def test_load_of_unit_source_on_unit_square():
    f_loc = local_load(UNIT_SQUARE_CELL, OrderPair(1, 0), lambda p: np.ones(len(p)))
    np.testing.assert_allclose(f_loc, [0, 0, 0, 0, 1.0], atol=1e-14)
    zero = local_load(UNIT_SQUARE_CELL, OrderPair(1, 0), lambda p: np.zeros(len(p)))
    np.testing.assert_array_equal(zero, 0.0)


def test_load_pairs_exactly_with_low_order_polynomials(cell, orders):
    linear = orders.m >= 1

    def f(p):
        return 1.0 - 0.5 * p[:, 0] + 0.25 * p[:, 1] if linear else np.full(len(p), 1.5)

    def q(p):
        return 2.0 + p[:, 1] if linear else np.full(len(p), -0.5)

    f_loc = local_load(cell, orders, f)
    dofs = interpolate(cell, orders, q)
    rule = polygon_quadrature(cell, 4)
    assert f_loc @ dofs == pytest.approx(rule.integrate(f(rule.points) * q(rule.points)), rel=1e-11)


def test_interpolate_constant():
    orders = OrderPair(3, 2)
    dofs = interpolate(HEXAGON_CELL, orders, lambda p: np.full(len(p), 0.25))
    n_b = dof_layout(HEXAGON_CELL, orders).n_boundary
    np.testing.assert_allclose(dofs[:n_b], 0.25)
    assert dofs[n_b] == pytest.approx(0.25)


@pytest.mark.parametrize("k", [1, 2])
def test_interpolation_error_decays_with_the_cell_size(k):
    orders = OrderPair(k, k)

    def smooth(p):
        return np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])

    def grad(p):
        return np.pi * np.column_stack(
            (np.cos(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]), np.sin(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1]))
        )

    sizes, errors = [], []
    for radius in (0.2, 0.1, 0.05, 0.025):
        cell = regular_polygon(6, radius=radius, center=(0.31, 0.27))
        ops = local_element(cell, orders)
        coeffs = ops.Pi_star @ interpolate(cell, orders, smooth)
        rule = polygon_quadrature(cell, 2 * k + 4)
        diff = grad(rule.points) - np.einsum("qai,a->qi", ops.context.basis.gradients(rule.points), coeffs)
        semi = np.sqrt(rule.integrate(np.sum(diff**2, axis=1)) / ops.context.geometry.area)
        sizes.append(2.0 * radius)
        errors.append(semi)
    assert estimate_rate(sizes, errors, window=3) == pytest.approx(k, abs=0.25)


def test_stabilization_ratio_is_scale_invariant():
    orders = OrderPair(2, 2)
    ratios = [
        stabilization_ratio(local_element(regular_polygon(6, radius=r, center=(0.5, 0.5)), orders))
        for r in (0.2, 0.1, 0.05)
    ]
    low, high = ratios[0]
    assert 0.0 < low <= high
    for lo, hi in ratios[1:]:
        assert lo == pytest.approx(low, rel=1e-6)
        assert hi == pytest.approx(high, rel=1e-6)


@pytest.mark.parametrize(("k", "m"), [(1, 0), (2, 1), (3, 3), (4, 2)])
def test_stabilization_vanishes_on_polynomials(k, m):
    ops = local_element(HEXAGON_CELL, OrderPair(k, m))
    S = stabilization(ops.context, ops.Pi)
    scale = np.abs(S).max()
    np.testing.assert_allclose(S @ ops.D, 0.0, atol=1e-10 * scale)
    assert np.linalg.eigvalsh(S).min() >= -1e-10 * scale


def test_quad_offset_reaches_the_operator_rules():
    orders = OrderPair(2, 1)
    base = local_element(HEXAGON_CELL, orders)
    raised = local_element(HEXAGON_CELL, orders, quad_offset=2)
    assert len(raised.context.rule.weights) > len(base.context.rule.weights)
    # Both rules are exact for the operator integrands.
    np.testing.assert_allclose(raised.K_loc, base.K_loc, atol=1e-12)
