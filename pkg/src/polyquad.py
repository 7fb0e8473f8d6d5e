"""Scaled monomials, quadrature on polygons and edges, and L2 projections."""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre
from scipy.linalg import LinAlgError, solve
from scipy.special import roots_jacobi

from src.config import LOAD_QUAD_OFFSET, MAX_EDGE_RULE_K
from src.errors import ConfigError, DegenerateCellError, QuadratureError
from src.geometry import ear_clip, is_convex, polygon_centroid
from src.mesh.quality import polygon_geometry
from src.mesh.types import ElementGeometry

Exponent = Tuple[int, int]
ScalarField = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def monomial_exponents(k: int) -> Tuple[Exponent, ...]:
    """Graded exponents (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ..."""
    return tuple((d - j, j) for d in range(k + 1) for j in range(d + 1))


def n_monomials(k: int) -> int:
    return (k + 1) * (k + 2) // 2 if k >= 0 else 0


@dataclass(frozen=True, eq=False)
class MonomialBasis:
    k: int
    center: np.ndarray
    h: float

    @cached_property
    def exponents(self) -> Tuple[Exponent, ...]:
        return monomial_exponents(self.k)

    @property
    def size(self) -> int:
        return n_monomials(self.k)

    def index(self, alpha: Exponent) -> int:
        d = alpha[0] + alpha[1]
        return d * (d + 1) // 2 + alpha[1]

    def values(self, points: np.ndarray) -> np.ndarray:
        """(n_points, size) matrix of m_alpha at the points."""
        xi = (np.atleast_2d(points) - self.center) / self.h
        px = xi[:, 0:1] ** np.arange(self.k + 1)
        py = xi[:, 1:2] ** np.arange(self.k + 1)
        a = np.array(self.exponents, dtype=int).reshape(-1, 2)
        return px[:, a[:, 0]] * py[:, a[:, 1]]

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """(n_points, size, 2) array of the exact gradients of m_alpha."""
        xi = (np.atleast_2d(points) - self.center) / self.h
        powers = np.arange(-1, self.k + 1)
        # Column p+1 holds xi**p; the p = -1 column is only ever multiplied by zero.
        with np.errstate(divide="ignore"):
            px = np.where(powers >= 0, xi[:, 0:1] ** np.maximum(powers, 0), 0.0)
            py = np.where(powers >= 0, xi[:, 1:2] ** np.maximum(powers, 0), 0.0)
        a = np.array(self.exponents, dtype=int).reshape(-1, 2)
        gx = a[:, 0] * px[:, a[:, 0]] * py[:, a[:, 1] + 1] / self.h
        gy = a[:, 1] * px[:, a[:, 0] + 1] * py[:, a[:, 1]] / self.h
        return np.stack((gx, gy), axis=-1)


def scaled_basis(geometry: ElementGeometry, k: int) -> MonomialBasis:
    return MonomialBasis(k=k, center=geometry.x_K, h=geometry.h_K)


def monomial_eval(basis: MonomialBasis, x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    point = np.asarray(x, dtype=float).reshape(1, 2)
    return basis.values(point)[0], basis.gradients(point)[0]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Sum weights * values along the first axis."""
        return np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=None)
def _collapsed_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss rule on the reference triangle (0,0), (1,0), (0,1).

    Gauss-Legendre along the collapsed direction times Gauss-Jacobi(1, 0)
    across it; exact for total degree <= degree, all weights positive.
    """
    n = degree // 2 + 1
    s, ws = legendre.leggauss(n)
    t, wt = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (s + 1.0)
    t = 0.5 * (t + 1.0)
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt) / 8.0  # 1/2 (Legendre) * 1/4 (Jacobi); reference area 1/2
    xi = S * (1.0 - T)
    eta = T
    return np.column_stack((xi.ravel(), eta.ravel())), W.ravel()


def triangle_rule(tri: np.ndarray, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    ref_points, ref_weights = _collapsed_rule(degree)
    a, b, c = tri
    jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    points = a + np.outer(ref_points[:, 0], b - a) + np.outer(ref_points[:, 1], c - a)
    return points, ref_weights * jac


def triangulate(poly: np.ndarray) -> List[np.ndarray]:
    """Centroid fan for convex polygons, ear clipping otherwise."""
    n = len(poly)
    if n == 3:
        return [poly.copy()]
    if is_convex(poly):
        center = polygon_centroid(poly)
        return [np.array([center, poly[i], poly[(i + 1) % n]]) for i in range(n)]
    try:
        return [poly[list(t)] for t in ear_clip(poly)]
    except ValueError as exc:
        raise QuadratureError(f"cannot triangulate polygon: {exc}") from exc


def _rule_from_triangles(triangles: Sequence[np.ndarray], degree: int) -> QuadratureRule:
    points, weights = zip(*(triangle_rule(t, degree) for t in triangles))
    return QuadratureRule(np.vstack(points), np.concatenate(weights), degree)


def polygon_quadrature(polygon: np.ndarray, degree: int) -> QuadratureRule:
    if degree < 0:
        raise QuadratureError(f"quadrature degree must be >= 0, got {degree}")
    return _rule_from_triangles(triangulate(np.asarray(polygon, dtype=float)), degree)


def _refine_toward(tri: np.ndarray, levels: int) -> List[np.ndarray]:
    # tri[0] is the corner; split off the corner half-triangle and recurse on it.
    if levels == 0:
        return [tri]
    c, p, q = tri
    pm, qm = 0.5 * (c + p), 0.5 * (c + q)
    far = [np.array([pm, p, q]), np.array([pm, q, qm])]
    return far + _refine_toward(np.array([c, pm, qm]), levels - 1)


def corner_refined_quadrature(
    polygon: np.ndarray, corner: Sequence[float], degree: int, levels: int, tol: float = 1e-12
) -> QuadratureRule:
    """Quadrature with dyadic sub-triangles graded toward a vertex of the polygon."""
    corner = np.asarray(corner, dtype=float)
    scale = float(np.abs(polygon).max())
    pieces: List[np.ndarray] = []
    for tri in triangulate(np.asarray(polygon, dtype=float)):
        hit = [i for i in range(3) if np.abs(tri[i] - corner).max() <= tol * max(scale, 1.0)]
        if hit:
            i = hit[0]
            pieces.extend(_refine_toward(tri[[i, (i + 1) % 3, (i + 2) % 3]], levels))
        else:
            pieces.append(tri)
    return _rule_from_triangles(pieces, degree)


@dataclass(frozen=True)
class EdgeRule:
    gauss_lobatto_nodes: np.ndarray
    gauss_lobatto_weights: np.ndarray
    gauss_nodes: np.ndarray
    gauss_weights: np.ndarray


@lru_cache(maxsize=None)
def edge_rules(k: int) -> EdgeRule:
    """Gauss-Lobatto(k+1) and Gauss(k+2) rules on [-1, 1]."""
    if not 1 <= k <= MAX_EDGE_RULE_K:
        raise ConfigError(f"edge rules are available for 1 <= k <= {MAX_EDGE_RULE_K}, got {k}")
    p_k = legendre.Legendre.basis(k)
    interior = np.sort(p_k.deriv().roots().real) if k > 1 else np.empty(0)
    nodes = np.concatenate(([-1.0], interior, [1.0]))
    weights = 2.0 / (k * (k + 1) * p_k(nodes) ** 2)
    g_nodes, g_weights = legendre.leggauss(k + 2)
    return EdgeRule(nodes, weights, g_nodes, g_weights)


def lagrange_basis(nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    """(len(t), len(nodes)) values of the Lagrange polynomials on the nodes."""
    t = np.atleast_1d(t)
    out = np.ones((len(t), len(nodes)))
    for j, xj in enumerate(nodes):
        for i, xi in enumerate(nodes):
            if i != j:
                out[:, j] *= (t - xi) / (xj - xi)
    return out


def mass_matrix(basis: MonomialBasis, rule: QuadratureRule) -> np.ndarray:
    v = basis.values(rule.points)
    return v.T @ (rule.weights[:, None] * v)


def l2_project_function(
    f: ScalarField,
    polygon: np.ndarray,
    m: int,
    quad_degree: Optional[int] = None,
    geometry: Optional[ElementGeometry] = None,
) -> np.ndarray:
    """Coefficients of the L2(K) projection of f onto P_m in the scaled monomial basis."""
    polygon = np.asarray(polygon, dtype=float)
    geometry = geometry or polygon_geometry(polygon)
    if quad_degree is None:
        quad_degree = 2 * m + LOAD_QUAD_OFFSET
    basis = scaled_basis(geometry, m)
    rule = polygon_quadrature(polygon, max(quad_degree, 2 * m))
    values = basis.values(rule.points)
    mass = values.T @ (rule.weights[:, None] * values)
    rhs = values.T @ (rule.weights * np.asarray(f(rule.points), dtype=float))
    try:
        return solve(mass, rhs, assume_a="pos")
    except LinAlgError as exc:
        raise DegenerateCellError(f"singular mass matrix: {exc}") from exc
