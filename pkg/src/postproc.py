"""Computable error norms over the whole domain and over disk-shaped interior regions.

A region is the union of whole cells, so the disk boundary itself is never
integrated over: ``inner`` holds the cells inside the closed disk, ``outer``
the cells that touch it.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, FrozenSet, Optional, Sequence, Tuple

import numpy as np

from src.config import CORNER_REFINE_LEVELS, ERROR_QUAD_OFFSET
from src.errors import ConfigError, EvaluationError
from src.geometry import point_in_polygon, segment_hits_disk
from src.mesh.types import Domain, Mesh
from src.polyquad import QuadratureRule, corner_refined_quadrature, n_monomials, polygon_quadrature
from src.system import build_elements, build_global_dofmap
from src.vem.dofs import OrderPair
from src.vem.element import LocalOperators

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Subdomain:
    center: Tuple[float, float]
    radius: float
    kind: str = "disk"

    def __post_init__(self) -> None:
        if self.kind != "disk":
            raise ConfigError(f"unsupported subdomain kind {self.kind!r}")
        if not self.radius > 0.0:
            raise ConfigError(f"subdomain radius must be positive, got {self.radius}")

    def check_inside(self, domain: Domain) -> None:
        """The closed disk must sit strictly inside the domain."""
        center = np.asarray(self.center, dtype=float)
        if not domain.contains(center) or domain.boundary_distance(center) <= self.radius:
            raise ConfigError(
                f"disk at {self.center} with radius {self.radius} is not strictly inside {domain.value}"
            )

    def distance(self, points: np.ndarray) -> np.ndarray:
        return np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1])


def classify_elements(mesh: Mesh, sub: Subdomain) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    """Cells contained in the closed disk, and cells meeting it."""
    center = np.asarray(sub.center, dtype=float)
    inner, outer = set(), set()
    for c in range(mesh.n_cells):
        poly = mesh.cell_coords(c)
        # The disk is convex: a cell whose vertices are all in it lies in it.
        if np.all(sub.distance(poly) <= sub.radius):
            inner.add(c)
            outer.add(c)
            continue
        n = len(poly)
        touches = any(segment_hits_disk(poly[i], poly[(i + 1) % n], center, sub.radius) for i in range(n))
        if touches or point_in_polygon(center, poly):
            outer.add(c)
    return frozenset(inner), frozenset(outer)


@dataclass(frozen=True, eq=False)
class ErrorReport:
    e1_global: float
    e1_inner: float
    e1_outer: float
    l2_global: float
    n_inner_cells: int
    n_outer_cells: int
    inner: FrozenSet[int]
    outer: FrozenSet[int]
    cell_e1_sq: np.ndarray  # squared H1-type error per cell
    cell_l2_sq: np.ndarray


def _error_rule(poly: np.ndarray, degree: int, singular_point: Optional[np.ndarray]) -> QuadratureRule:
    if singular_point is not None:
        scale = max(float(np.abs(poly).max()), 1.0)
        if np.any(np.abs(poly - singular_point).max(axis=1) <= 1e-12 * scale):
            return corner_refined_quadrature(poly, singular_point, degree, CORNER_REFINE_LEVELS)
    return polygon_quadrature(poly, degree)


def _checked(values: np.ndarray, points: np.ndarray, cell: int, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values.reshape(len(points), -1)).all(axis=1)
    if bad.any():
        raise EvaluationError(f"exact {what} is not finite", cell, points[np.argmax(bad)])
    return values


def cell_errors(
    ops: LocalOperators,
    u_loc: np.ndarray,
    exact_u: ScalarField,
    exact_grad: VectorField,
    *,
    cell: int = -1,
    quad_offset: int = 0,
    singular_point: Optional[Sequence[float]] = None,
) -> Tuple[float, float]:
    """(||u - P0_k u_h||^2 + ||grad u - P0_{k-1} grad u_h||^2, ||u - P0_k u_h||^2) on one cell."""
    ctx = ops.context
    k = ctx.orders.k
    point = None if singular_point is None else np.asarray(singular_point, dtype=float)
    rule = _error_rule(ctx.polygon, 2 * k + ERROR_QUAD_OFFSET + quad_offset, point)
    values = ctx.basis.values(rule.points)
    uh = values @ (ops.Pi0k_star @ u_loc)
    low = values[:, : n_monomials(k - 1)]
    gh = np.column_stack((low @ (ops.Pi0grad[0] @ u_loc), low @ (ops.Pi0grad[1] @ u_loc)))
    u = _checked(exact_u(rule.points), rule.points, cell, "solution")
    grad = _checked(exact_grad(rule.points), rule.points, cell, "gradient").reshape(-1, 2)
    l2 = float(rule.weights @ (u - uh) ** 2)
    semi = float(rule.weights @ np.sum((grad - gh) ** 2, axis=1))
    return l2 + semi, l2


def compute_errors(
    mesh: Mesh,
    orders: OrderPair,
    u_dofs: np.ndarray,
    exact: Tuple[ScalarField, VectorField],
    sub: Subdomain,
    *,
    cell_dofs: Optional[Sequence[np.ndarray]] = None,
    elements: Optional[Sequence[LocalOperators]] = None,
    quad_offset: int = 0,
    singular_point: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> ErrorReport:
    """Global, inner and outer errors of a solved dof vector against the exact fields.

    Cells sharing a vertex with ``singular_point`` are integrated with a
    quadrature graded toward it.
    """
    if cell_dofs is None:
        cell_dofs = build_global_dofmap(mesh, orders).cell_dofs
    if elements is None:
        elements = build_elements(mesh, orders, workers=workers)
    exact_u, exact_grad = exact

    def one(c: int) -> Tuple[float, float]:
        return cell_errors(
            elements[c],
            u_dofs[cell_dofs[c]],
            exact_u,
            exact_grad,
            cell=c,
            quad_offset=quad_offset,
            singular_point=singular_point,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(one, range(mesh.n_cells)))
    else:
        per_cell = [one(c) for c in range(mesh.n_cells)]
    e1_sq = np.array([p[0] for p in per_cell])
    l2_sq = np.array([p[1] for p in per_cell])

    inner, outer = classify_elements(mesh, sub)
    if not inner:
        logger.warning("no cell lies inside the disk at %s; inner error is zero", sub.center)
    inner_sum = sum(e1_sq[c] for c in sorted(inner))
    outer_sum = sum(e1_sq[c] for c in sorted(outer))
    return ErrorReport(
        e1_global=float(np.sqrt(np.sum(e1_sq))),
        e1_inner=float(np.sqrt(inner_sum)),
        e1_outer=float(np.sqrt(outer_sum)),
        l2_global=float(np.sqrt(np.sum(l2_sq))),
        n_inner_cells=len(inner),
        n_outer_cells=len(outer),
        inner=inner,
        outer=outer,
        cell_e1_sq=e1_sq,
        cell_l2_sq=l2_sq,
    )
