"""Per-element virtual element operators.

Every matrix acts on the local dof vector laid out by ``dof_layout``:
boundary Gauss-Lobatto values first, scaled internal moments
(1/|K|) int_K v m_alpha after them. Polynomials are expressed in the scaled
monomial basis centred at the cell centroid with scale h_K.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh, solve

from src.config import LOAD_QUAD_OFFSET, MOMENT_STAB_WEIGHT, OPERATOR_QUAD_OFFSET
from src.errors import DegenerateCellError
from src.mesh.quality import polygon_geometry
from src.mesh.types import ElementGeometry
from src.polyquad import (
    MonomialBasis,
    QuadratureRule,
    edge_rules,
    lagrange_basis,
    n_monomials,
    polygon_quadrature,
    scaled_basis,
)
from src.vem.dofs import DofMap, OrderPair, dof_layout

ScalarField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class CellContext:
    polygon: np.ndarray
    geometry: ElementGeometry
    orders: OrderPair
    dofmap: DofMap
    basis: MonomialBasis
    rule: QuadratureRule
    mass: np.ndarray  # int_K m_a m_b over P_k
    stiffness: np.ndarray  # int_K grad m_a . grad m_b over P_k (singular)


@dataclass(frozen=True, eq=False)
class LocalOperators:
    context: CellContext
    D: np.ndarray
    B: np.ndarray
    G: np.ndarray
    Pi_star: np.ndarray
    Pi: np.ndarray
    Pi0k_star: np.ndarray
    Pi0grad: Tuple[np.ndarray, np.ndarray]
    K_loc: np.ndarray
    f_loc: Optional[np.ndarray] = None


def prepare_cell(
    cell: np.ndarray, orders: OrderPair, cell_index: int = -1, quad_offset: int = 0
) -> CellContext:
    polygon = np.asarray(cell, dtype=float)
    geometry = polygon_geometry(polygon, cell_index)
    basis = scaled_basis(geometry, orders.k)
    rule = polygon_quadrature(polygon, 2 * orders.k + OPERATOR_QUAD_OFFSET + quad_offset)
    values = basis.values(rule.points)
    grads = basis.gradients(rule.points)
    mass = values.T @ (rule.weights[:, None] * values)
    stiffness = np.einsum("q,qai,qbi->ab", rule.weights, grads, grads)
    return CellContext(
        polygon=polygon,
        geometry=geometry,
        orders=orders,
        dofmap=dof_layout(polygon, orders),
        basis=basis,
        rule=rule,
        mass=mass,
        stiffness=stiffness,
    )


@lru_cache(maxsize=None)
def _edge_reference(k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rules = edge_rules(k)
    lag = lagrange_basis(rules.gauss_lobatto_nodes, rules.gauss_nodes)
    return rules.gauss_nodes, rules.gauss_weights, lag


def _edges(ctx: CellContext) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Per edge: local dofs, Gauss points, scaled weights, Lagrange values, outward normal."""
    nodes, weights, lag = _edge_reference(ctx.orders.k)
    poly = ctx.polygon
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        d = b - a
        length = float(np.hypot(d[0], d[1]))
        normal = np.array([d[1], -d[0]]) / length
        points = a + np.outer(0.5 * (nodes + 1.0), d)
        yield ctx.dofmap.edge_dofs[i], points, 0.5 * length * weights, lag, normal


def _solve(matrix: np.ndarray, rhs: np.ndarray, what: str, assume_a: str = "gen") -> np.ndarray:
    """Solve after symmetric diagonal equilibration, with one refinement step."""
    diag = np.abs(np.diag(matrix))
    if not np.all(diag > 0.0):
        raise DegenerateCellError(f"singular {what}: zero on the diagonal")
    scale = 1.0 / np.sqrt(diag)
    scaled = scale[:, None] * matrix * scale[None, :]
    col = scale.reshape((-1,) + (1,) * (np.ndim(rhs) - 1))
    try:
        x = col * solve(scaled, col * rhs, assume_a=assume_a)
        return x + col * solve(scaled, col * (rhs - matrix @ x), assume_a=assume_a)
    except LinAlgError as exc:
        raise DegenerateCellError(f"singular {what}: {exc}") from exc


def dof_matrix(ctx: CellContext) -> np.ndarray:
    dm = ctx.dofmap
    D = np.empty((dm.n_dofs, ctx.orders.n_k))
    D[: dm.n_boundary] = ctx.basis.values(dm.boundary_nodes)
    D[dm.n_boundary :] = ctx.mass[: dm.n_internal] / ctx.geometry.area
    return D


def projector_rhs(ctx: CellContext) -> np.ndarray:
    """B with int_K grad v . grad m_a = -int_K v lap m_a + int_dK v grad m_a . n."""
    dm = ctx.dofmap
    basis = ctx.basis
    area, h = ctx.geometry.area, ctx.geometry.h_K
    B = np.zeros((ctx.orders.n_k, dm.n_dofs))
    for dofs, points, weights, lag, normal in _edges(ctx):
        flux = basis.gradients(points) @ normal
        B[:, dofs] += flux.T @ (weights[:, None] * lag)
    for a, alpha in enumerate(basis.exponents):
        for axis in (0, 1):
            p = alpha[axis]
            if p >= 2:
                gamma = (alpha[0] - 2, alpha[1]) if axis == 0 else (alpha[0], alpha[1] - 2)
                B[a, dm.internal(basis.index(gamma))] -= p * (p - 1) * area / h**2
    # Mean constraint through the zeroth moment.
    B[0, :] = 0.0
    B[0, dm.internal(0)] = 1.0
    return B


def projector_nabla(ctx: CellContext):
    D = dof_matrix(ctx)
    B = projector_rhs(ctx)
    G = ctx.stiffness.copy()
    G[0, :] = ctx.mass[0, :] / ctx.geometry.area
    Pi_star = _solve(G, B, "projector matrix G")
    return D, B, G, Pi_star, D @ Pi_star


def l2_projection_of_vh(ctx: CellContext, Pi_star: np.ndarray) -> np.ndarray:
    """Monomial coefficients of the L2 projection onto P_k of a discrete function.

    Moments up to degree m come from the internal dofs; the higher ones are
    taken from the energy projection.
    """
    dm = ctx.dofmap
    n_m = dm.n_internal
    C = np.zeros((ctx.orders.n_k, dm.n_dofs))
    C[:n_m, dm.n_boundary :] = ctx.geometry.area * np.eye(n_m)
    C[n_m:] = (ctx.mass @ Pi_star)[n_m:]
    return _solve(ctx.mass, C, "mass matrix", assume_a="pos")


def grad_projection(ctx: CellContext) -> Tuple[np.ndarray, np.ndarray]:
    """L2 projections onto P_{k-1} of the two partial derivatives."""
    dm = ctx.dofmap
    k = ctx.orders.k
    n_low = n_monomials(k - 1)
    basis = ctx.basis
    area, h = ctx.geometry.area, ctx.geometry.h_K
    rhs = [np.zeros((n_low, dm.n_dofs)), np.zeros((n_low, dm.n_dofs))]
    for dofs, points, weights, lag, normal in _edges(ctx):
        trace = basis.values(points)[:, :n_low].T @ (weights[:, None] * lag)
        rhs[0][:, dofs] += normal[0] * trace
        rhs[1][:, dofs] += normal[1] * trace
    for b, beta in enumerate(basis.exponents[:n_low]):
        for axis in (0, 1):
            p = beta[axis]
            if p >= 1:
                gamma = (beta[0] - 1, beta[1]) if axis == 0 else (beta[0], beta[1] - 1)
                rhs[axis][b, dm.internal(basis.index(gamma))] -= p * area / h
    mass_low = ctx.mass[:n_low, :n_low]
    return (
        _solve(mass_low, rhs[0], "mass matrix", assume_a="pos"),
        _solve(mass_low, rhs[1], "mass matrix", assume_a="pos"),
    )


def stabilization(ctx: CellContext, Pi: np.ndarray) -> np.ndarray:
    """Dof-wise stabilization of v - Pi v.

    Boundary values enter with unit weight. The internal moments are weighted
    by the inverse moment Gram matrix times the lowest Dirichlet eigenvalue of
    the unit-area disk, so that the moment block equals
    lambda * ||P0_m (v - Pi v)||^2 with lambda = MOMENT_STAB_WEIGHT / |K|, a
    Poincare lower bound for the energy of a bubble with those moments.
    """
    dm = ctx.dofmap
    n_b, n_m = dm.n_boundary, dm.n_internal
    weights = np.eye(dm.n_dofs)
    if n_m:
        gram = ctx.mass[:n_m, :n_m] / ctx.geometry.area
        inverse = _solve(gram, np.eye(n_m), "moment Gram matrix", assume_a="pos")
        weights[n_b:, n_b:] = MOMENT_STAB_WEIGHT * 0.5 * (inverse + inverse.T)
    complement = np.eye(dm.n_dofs) - Pi
    S = complement.T @ weights @ complement
    return 0.5 * (S + S.T)


def stiffness_matrix(ctx: CellContext, Pi_star: np.ndarray, Pi: np.ndarray) -> np.ndarray:
    """Consistency term plus the stabilization."""
    consistency = Pi_star.T @ ctx.stiffness @ Pi_star
    K = 0.5 * (consistency + consistency.T) + stabilization(ctx, Pi)
    return 0.5 * (K + K.T)


def load_vector(ctx: CellContext, f: ScalarField, quad_offset: int = 0) -> np.ndarray:
    """int_K (P0_m f) v_h, which only sees the internal moments of v_h."""
    dm = ctx.dofmap
    n_m = dm.n_internal
    rule = polygon_quadrature(ctx.polygon, 2 * ctx.orders.k + LOAD_QUAD_OFFSET + quad_offset)
    values = ctx.basis.values(rule.points)[:, :n_m]
    moments = values.T @ (rule.weights * np.asarray(f(rule.points), dtype=float))
    coefficients = _solve(ctx.mass[:n_m, :n_m], moments, "mass matrix", assume_a="pos")
    f_loc = np.zeros(dm.n_dofs)
    f_loc[dm.n_boundary :] = ctx.geometry.area * coefficients
    return f_loc


def interpolate_context(ctx: CellContext, v: ScalarField, quad_offset: int = 0) -> np.ndarray:
    dm = ctx.dofmap
    dofs = np.empty(dm.n_dofs)
    dofs[: dm.n_boundary] = v(dm.boundary_nodes)
    rule = polygon_quadrature(ctx.polygon, 2 * ctx.orders.k + LOAD_QUAD_OFFSET + quad_offset)
    values = ctx.basis.values(rule.points)[:, : dm.n_internal]
    dofs[dm.n_boundary :] = values.T @ (rule.weights * v(rule.points)) / ctx.geometry.area
    return dofs


def build_local_operators(
    ctx: CellContext, f: Optional[ScalarField] = None, quad_offset: int = 0
) -> LocalOperators:
    D, B, G, Pi_star, Pi = projector_nabla(ctx)
    return LocalOperators(
        context=ctx,
        D=D,
        B=B,
        G=G,
        Pi_star=Pi_star,
        Pi=Pi,
        Pi0k_star=l2_projection_of_vh(ctx, Pi_star),
        Pi0grad=grad_projection(ctx),
        K_loc=stiffness_matrix(ctx, Pi_star, Pi),
        f_loc=None if f is None else load_vector(ctx, f, quad_offset),
    )


def local_element(
    cell: np.ndarray,
    orders: OrderPair,
    f: Optional[ScalarField] = None,
    *,
    cell_index: int = -1,
    quad_offset: int = 0,
) -> LocalOperators:
    return build_local_operators(prepare_cell(cell, orders, cell_index, quad_offset), f, quad_offset)


# Single-operator entry points


def build_projector_nabla(cell: np.ndarray, orders: OrderPair):
    """(D, B, G, Pi_star, Pi) of the energy projection onto P_k."""
    return projector_nabla(prepare_cell(cell, orders))


def build_l2_projection_of_vh(cell: np.ndarray, orders: OrderPair, Pi_star: np.ndarray) -> np.ndarray:
    return l2_projection_of_vh(prepare_cell(cell, orders), Pi_star)


def build_grad_projection(cell: np.ndarray, orders: OrderPair) -> Tuple[np.ndarray, np.ndarray]:
    return grad_projection(prepare_cell(cell, orders))


def local_stiffness(cell: np.ndarray, orders: OrderPair) -> np.ndarray:
    ctx = prepare_cell(cell, orders)
    _, _, _, Pi_star, Pi = projector_nabla(ctx)
    return stiffness_matrix(ctx, Pi_star, Pi)


def local_load(cell: np.ndarray, orders: OrderPair, f: ScalarField) -> np.ndarray:
    return load_vector(prepare_cell(cell, orders), f)


def interpolate(cell: np.ndarray, orders: OrderPair, v: ScalarField) -> np.ndarray:
    """Dof interpolant: point values at the boundary nodes and moments of v."""
    return interpolate_context(prepare_cell(cell, orders), v)


def stabilization_ratio(ops: LocalOperators) -> Tuple[float, float]:
    """Extreme nonzero eigenvalues of the stabilization on ker(Pi), relative to the
    largest eigenvalue of the consistency term.

    Both terms are scale-free in two dimensions, so on shape-regular cells the
    interval stays put under refinement.
    """
    stab = stabilization(ops.context, ops.Pi)
    consistency = ops.Pi_star.T @ ops.context.stiffness @ ops.Pi_star
    lam_c = eigh(0.5 * (consistency + consistency.T), eigvals_only=True)
    lam_s = eigh(0.5 * (stab + stab.T), eigvals_only=True)
    nonzero = lam_s[lam_s > 1e-10 * lam_s.max()]
    return float(nonzero.min() / lam_c.max()), float(nonzero.max() / lam_c.max())
