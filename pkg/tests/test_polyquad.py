import numpy as np
import pytest

from src.errors import ConfigError
from src.mesh import polygon_geometry
from src.polyquad import (
    MonomialBasis,
    corner_refined_quadrature,
    edge_rules,
    l2_project_function,
    lagrange_basis,
    mass_matrix,
    monomial_exponents,
    n_monomials,
    polygon_quadrature,
    scaled_basis,
)

from tests.conftest import ARROW_CELL, HEXAGON_CELL, UNIT_SQUARE_CELL

L_POLY = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])


def test_graded_exponent_order():
    assert monomial_exponents(2) == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    assert [n_monomials(k) for k in range(5)] == [1, 3, 6, 10, 15]
    basis = MonomialBasis(3, np.zeros(2), 1.0)
    assert all(basis.index(alpha) == i for i, alpha in enumerate(basis.exponents))


@pytest.mark.parametrize("degree", [0, 2, 5, 8, 12])
def test_square_rule_integrates_monomials_exactly(degree):
    rule = polygon_quadrature(UNIT_SQUARE_CELL, degree)
    assert np.all(rule.weights > 0.0)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            approx = rule.integrate(rule.points[:, 0] ** a * rule.points[:, 1] ** b)
            assert approx == pytest.approx(1.0 / ((a + 1) * (b + 1)), rel=1e-12)


def test_nonconvex_rule_moments():
    rule = polygon_quadrature(L_POLY, 4)
    assert rule.integrate(np.ones(len(rule.weights))) == pytest.approx(3.0)
    assert rule.integrate(rule.points[:, 0]) == pytest.approx(2.5)
    assert rule.integrate(rule.points[:, 1]) == pytest.approx(2.5)
    # int x^2 over [0,2]x[0,1] plus [0,1]x[1,2]
    assert rule.integrate(rule.points[:, 0] ** 2) == pytest.approx(8.0 / 3.0 + 1.0 / 3.0)


def test_corner_refined_rule_keeps_polynomial_exactness():
    plain = polygon_quadrature(HEXAGON_CELL, 6)
    refined = corner_refined_quadrature(HEXAGON_CELL, HEXAGON_CELL[2], 6, levels=4)
    assert len(refined.weights) > len(plain.weights)
    f = lambda p: 1.0 + p[:, 0] ** 3 - 2.0 * p[:, 0] * p[:, 1] ** 2  # noqa: E731
    assert refined.integrate(f(refined.points)) == pytest.approx(plain.integrate(f(plain.points)), rel=1e-12)


def test_corner_refinement_resolves_a_gradient_singularity():
    # int_0^1 int_0^1 (x^2 + y^2)^(-1/3); reference from a heavily graded rule
    f = lambda p: np.hypot(p[:, 0], p[:, 1]) ** (-2.0 / 3.0)  # noqa: E731
    reference = corner_refined_quadrature(UNIT_SQUARE_CELL, (0.0, 0.0), 12, levels=30)
    exact = reference.integrate(f(reference.points))
    plain = polygon_quadrature(UNIT_SQUARE_CELL, 8)
    refined = corner_refined_quadrature(UNIT_SQUARE_CELL, (0.0, 0.0), 8, levels=4)
    assert abs(refined.integrate(f(refined.points)) - exact) < abs(plain.integrate(f(plain.points)) - exact)


def test_edge_rules():
    rules = edge_rules(2)
    np.testing.assert_allclose(rules.gauss_lobatto_nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(rules.gauss_lobatto_weights, [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0])
    np.testing.assert_allclose(edge_rules(3).gauss_lobatto_nodes, [-1.0, -1 / np.sqrt(5), 1 / np.sqrt(5), 1.0])
    assert len(edge_rules(4).gauss_nodes) == 6
    with pytest.raises(ConfigError):
        edge_rules(0)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_lobatto_rule_exact_to_degree_2k_minus_1(k):
    rules = edge_rules(k)
    for p in range(2 * k):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert rules.gauss_lobatto_weights @ rules.gauss_lobatto_nodes**p == pytest.approx(exact, abs=1e-13)


def test_lagrange_basis_is_cardinal():
    nodes = edge_rules(4).gauss_lobatto_nodes
    np.testing.assert_allclose(lagrange_basis(nodes, nodes), np.eye(len(nodes)), atol=1e-13)
    t = np.linspace(-1.0, 1.0, 7)
    np.testing.assert_allclose(lagrange_basis(nodes, t).sum(axis=1), 1.0)


def test_basis_gradients_match_finite_differences():
    geometry = polygon_geometry(HEXAGON_CELL)
    basis = scaled_basis(geometry, 4)
    point = np.array([[0.41, 0.13]])
    step = 1e-6
    fd_x = (basis.values(point + [step, 0.0]) - basis.values(point - [step, 0.0])) / (2 * step)
    fd_y = (basis.values(point + [0.0, step]) - basis.values(point - [0.0, step])) / (2 * step)
    grads = basis.gradients(point)[0]
    np.testing.assert_allclose(grads[:, 0], fd_x[0], rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(grads[:, 1], fd_y[0], rtol=1e-6, atol=1e-8)


def test_mass_matrix_is_spd():
    geometry = polygon_geometry(ARROW_CELL)
    basis = scaled_basis(geometry, 3)
    mass = mass_matrix(basis, polygon_quadrature(ARROW_CELL, 6))
    np.testing.assert_allclose(mass, mass.T, atol=1e-15)
    assert np.linalg.eigvalsh(mass).min() > 0.0
    assert mass[0, 0] == pytest.approx(geometry.area)


def test_l2_projection_reproduces_polynomials():
    coeffs = l2_project_function(lambda p: 1.0 + p[:, 0], UNIT_SQUARE_CELL, 1)
    np.testing.assert_allclose(coeffs, [1.5, np.sqrt(2.0), 0.0], atol=1e-12)


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_l2_projection_error_decays_like_h_to_m_plus_1(m):
    def f(p):
        return np.exp(p[:, 0] + 0.5 * p[:, 1])

    center = HEXAGON_CELL.mean(axis=0)
    sizes = np.array([0.2, 0.1, 0.05])
    errors = []
    for size in sizes:
        cell = (HEXAGON_CELL - center) * size + np.array([0.3, 0.4])
        geometry = polygon_geometry(cell)
        coeffs = l2_project_function(f, cell, m, geometry=geometry)
        rule = polygon_quadrature(cell, 2 * m + 8)
        diff = f(rule.points) - scaled_basis(geometry, m).values(rule.points) @ coeffs
        errors.append(np.sqrt(rule.weights @ diff**2 / geometry.area))
    slopes = np.diff(np.log(errors)) / np.diff(np.log(sizes))
    np.testing.assert_allclose(slopes, m + 1, atol=0.2)
