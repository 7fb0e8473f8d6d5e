"""Global degrees of freedom, assembly, Dirichlet elimination and the linear solve."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix, diags
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, cg, splu
from scipy.spatial import cKDTree

from src.config import (
    CG_MAX_ITER_FACTOR,
    DEFAULT_SOLVER,
    DEFAULT_SOLVER_TOL,
    DIRECT_SOLVER_LIMIT,
    MAX_REFINEMENT_STEPS,
    NODE_MATCH_TOL,
)
from src.errors import ConfigError, ConformityError, DegenerateCellError, SolverError
from src.mesh.types import Mesh
from src.vem.dofs import DofMap, OrderPair, dof_layout
from src.vem.element import LocalOperators, local_element

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]
SOLVERS = ("direct", "cg", "auto")


@dataclass(frozen=True, eq=False)
class GlobalDofMap:
    orders: OrderPair
    layouts: Tuple[DofMap, ...]
    cell_dofs: Tuple[np.ndarray, ...]
    n_global: int
    boundary: np.ndarray  # bool flag per global dof
    node_coords: np.ndarray  # NaN rows for internal moment dofs

    @property
    def boundary_dofs(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    @property
    def free_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def value_dofs(self) -> np.ndarray:
        return np.flatnonzero(~np.isnan(self.node_coords[:, 0]))


def _node_key(cell: Sequence[int], j: int, k: int) -> Tuple[Hashable, ...]:
    """Topological identity of local boundary node j; edge nodes are keyed along the sorted edge."""
    i, t = divmod(j, k)
    if t == 0:
        return ("v", cell[i])
    a, b = cell[i], cell[(i + 1) % len(cell)]
    return ("e", a, b, t) if a < b else ("e", b, a, k - t)


def build_global_dofmap(mesh: Mesh, orders: OrderPair) -> GlobalDofMap:
    """Glue boundary nodes of neighbouring cells by position and check the gluing topologically."""
    k = orders.k
    layouts = tuple(dof_layout(mesh.cell_coords(c), orders) for c in range(mesh.n_cells))
    coords = np.vstack([lay.boundary_nodes for lay in layouts])
    owners = [(c, j) for c, lay in enumerate(layouts) for j in range(lay.n_boundary)]

    tree = cKDTree(coords)
    pairs = tree.query_pairs(NODE_MATCH_TOL * mesh.h, output_type="ndarray")
    n_nodes = len(coords)
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n_nodes, n_nodes)
    )
    _, labels = connected_components(graph, directed=False)

    key_of_label: Dict[int, Tuple[Hashable, ...]] = {}
    label_of_key: Dict[Tuple[Hashable, ...], int] = {}
    for node, (c, j) in enumerate(owners):
        key = _node_key(mesh.cells[c], j, k)
        label = int(labels[node])
        if key_of_label.setdefault(label, key) != key or label_of_key.setdefault(key, label) != label:
            x, y = coords[node]
            raise ConformityError(
                f"node ({x:.17g}, {y:.17g}) of cell {c} does not match its neighbour's nodes"
            )

    global_of_label: Dict[int, int] = {}
    cell_dofs: List[np.ndarray] = []
    node_coords: List[np.ndarray] = []
    boundary: List[bool] = []
    boundary_edges = set(mesh.boundary_edges)
    boundary_vertices = mesh.boundary_vertices
    node = 0
    for c, lay in enumerate(layouts):
        cell = mesh.cells[c]
        dofs = np.empty(lay.n_dofs, dtype=int)
        for j in range(lay.n_boundary):
            label = int(labels[node])
            if label not in global_of_label:
                global_of_label[label] = len(boundary)
                i, t = divmod(j, k)
                if t == 0:
                    on_boundary = cell[i] in boundary_vertices
                else:
                    on_boundary = (cell[i], cell[(i + 1) % len(cell)]) in boundary_edges
                boundary.append(on_boundary)
                node_coords.append(coords[node])
            dofs[j] = global_of_label[label]
            node += 1
        for j in range(lay.n_boundary, lay.n_dofs):
            dofs[j] = len(boundary)
            boundary.append(False)
            node_coords.append(np.array([np.nan, np.nan]))
        cell_dofs.append(dofs)

    n_global = len(boundary)
    logger.debug("global dofs: %d (%d on the boundary)", n_global, sum(boundary))
    return GlobalDofMap(
        orders=orders,
        layouts=layouts,
        cell_dofs=tuple(cell_dofs),
        n_global=n_global,
        boundary=np.array(boundary, dtype=bool),
        node_coords=np.array(node_coords, dtype=float).reshape(n_global, 2),
    )


def build_elements(
    mesh: Mesh,
    orders: OrderPair,
    f: Optional[ScalarField] = None,
    *,
    workers: int = 1,
    quad_offset: int = 0,
) -> List[LocalOperators]:
    """Local operators of every cell, returned in cell order whatever the worker count."""

    def build(c: int) -> LocalOperators:
        try:
            return local_element(
                mesh.cell_coords(c), orders, f, cell_index=c, quad_offset=quad_offset
            )
        except DegenerateCellError as exc:
            if exc.cell is None:
                raise DegenerateCellError(f"cell {c}: {exc}", cell=c) from exc
            raise

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(build, range(mesh.n_cells)))
    return [build(c) for c in range(mesh.n_cells)]


def assemble(
    mesh: Mesh,
    orders: OrderPair,
    f: Optional[ScalarField] = None,
    *,
    dofmap: Optional[GlobalDofMap] = None,
    elements: Optional[Sequence[LocalOperators]] = None,
    workers: int = 1,
) -> Tuple[csr_matrix, np.ndarray]:
    """Scatter local stiffness matrices and load vectors into (A_full, b_full)."""
    dofmap = dofmap or build_global_dofmap(mesh, orders)
    if elements is None:
        elements = build_elements(mesh, orders, f, workers=workers)
    rows, cols, vals = [], [], []
    b = np.zeros(dofmap.n_global)
    for dofs, ops in zip(dofmap.cell_dofs, elements):
        r, c = np.meshgrid(dofs, dofs, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(ops.K_loc.ravel())
        if ops.f_loc is not None:
            np.add.at(b, dofs, ops.f_loc)
    shape = (dofmap.n_global, dofmap.n_global)
    A = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape
    ).tocsr()
    # Symmetric to the last bit regardless of how duplicates were summed.
    A = ((A + A.T) * 0.5).tocsr()
    A.sort_indices()
    return A, b


@dataclass(frozen=True, eq=False)
class SparseSystem:
    A: csr_matrix
    b: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    g_lift: np.ndarray  # full-length vector holding the Dirichlet values

    @property
    def n_free(self) -> int:
        return len(self.free)

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        u = self.g_lift.copy()
        u[self.free] = x_free
        return u


def apply_dirichlet(
    A_full: csr_matrix, b_full: np.ndarray, g: ScalarField, *, dofmap: GlobalDofMap
) -> SparseSystem:
    """Symmetric elimination of the boundary dofs, set to g at their nodes."""
    fixed = dofmap.boundary_dofs
    free = dofmap.free_dofs
    lift = np.zeros(dofmap.n_global)
    if len(fixed):
        lift[fixed] = np.asarray(g(dofmap.node_coords[fixed]), dtype=float)
    A_free = A_full[free][:, free].tocsr()
    b_free = b_full[free] - A_full[free][:, fixed] @ lift[fixed]
    return SparseSystem(A=A_free, b=b_free, free=free, fixed=fixed, g_lift=lift)


def _relative_residual(A: csr_matrix, x: np.ndarray, b: np.ndarray) -> float:
    norm_b = float(np.linalg.norm(b))
    r = float(np.linalg.norm(b - A @ x))
    return r / norm_b if norm_b > 0.0 else r


def _backward_error(A: csr_matrix, x: np.ndarray, b: np.ndarray) -> float:
    """Componentwise backward error max_i |b - A x|_i / (|A| |x| + |b|)_i."""
    r = np.abs(b - A @ x)
    bound = abs(A) @ np.abs(x) + np.abs(b)
    if np.any(r[bound == 0.0] > 0.0):
        return float("inf")
    nonzero = bound > 0.0
    return float((r[nonzero] / bound[nonzero]).max()) if nonzero.any() else 0.0


def _solve_direct(A: csr_matrix, b: np.ndarray, rel_tol: float) -> np.ndarray:
    """Sparse LU of the Jacobi-equilibrated matrix plus iterative refinement.

    Refinement stops once the relative residual meets ``rel_tol`` or stops
    halving. A residual left above ``rel_tol`` is accepted only when the
    componentwise backward error is below it, i.e. the solution is exact
    for a matrix and right-hand side within ``rel_tol`` of the given ones.
    """
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise SolverError("matrix has a nonpositive diagonal entry; not SPD")
    scale = 1.0 / np.sqrt(diag)
    D = diags(scale)
    try:
        lu = splu((D @ A @ D).tocsc())
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    x = scale * lu.solve(scale * b)
    residual = _relative_residual(A, x, b)
    for step in range(MAX_REFINEMENT_STEPS):
        if residual <= rel_tol or not np.all(np.isfinite(x)):
            break
        candidate = x + scale * lu.solve(scale * (b - A @ x))
        updated = _relative_residual(A, candidate, b)
        if not updated < residual:
            break
        x, improved = candidate, updated <= 0.5 * residual
        residual = updated
        logger.debug("refinement step %d: relative residual %.3e", step + 1, residual)
        if not improved:
            break
    if not np.all(np.isfinite(x)):
        raise SolverError("direct solve produced non-finite values", residual)
    if residual > rel_tol:
        backward = _backward_error(A, x, b)
        if backward > rel_tol:
            raise SolverError(
                f"direct solve residual {residual:.3e} (backward error {backward:.3e}) "
                f"above tolerance {rel_tol:.1e}",
                residual,
            )
        logger.debug("residual %.3e at the conditioning floor; backward error %.3e", residual, backward)
    return x


def _solve_cg(A: csr_matrix, b: np.ndarray, rel_tol: float) -> np.ndarray:
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise SolverError("matrix has a nonpositive diagonal entry; not SPD")
    n = A.shape[0]
    jacobi = LinearOperator((n, n), matvec=lambda v: v / diag, dtype=float)
    iterations = [0]

    def count(_):
        iterations[0] += 1

    x, info = cg(
        A, b, rtol=rel_tol, atol=0.0, maxiter=CG_MAX_ITER_FACTOR * n, M=jacobi, callback=count
    )
    residual = _relative_residual(A, x, b)
    logger.debug("cg: %d iterations, relative residual %.3e", iterations[0], residual)
    if info != 0 or not np.all(np.isfinite(x)):
        raise SolverError(f"conjugate gradients did not converge in {iterations[0]} iterations", residual)
    return x


def solve(
    system: SparseSystem, rel_tol: float = DEFAULT_SOLVER_TOL, method: str = DEFAULT_SOLVER
) -> np.ndarray:
    """Solve the reduced system; returns the full dof vector including the lifted boundary values."""
    if method not in SOLVERS:
        raise ConfigError(f"unknown solver {method!r}; choose from {SOLVERS}")
    if system.n_free == 0:
        return system.g_lift.copy()
    if method == "auto":
        method = "direct" if system.n_free < DIRECT_SOLVER_LIMIT else "cg"
    if method == "direct":
        x = _solve_direct(system.A, system.b, rel_tol)
    else:
        x = _solve_cg(system.A, system.b, rel_tol)
    return system.expand(x)


@dataclass(frozen=True, eq=False)
class Solution:
    mesh: Mesh
    orders: OrderPair
    dofmap: GlobalDofMap
    elements: List[LocalOperators]
    system: SparseSystem
    u: np.ndarray

    @property
    def ndof(self) -> int:
        return self.dofmap.n_global

    def cell_values(self, cell: int) -> np.ndarray:
        return self.u[self.dofmap.cell_dofs[cell]]


def solve_problem(
    mesh: Mesh,
    orders: OrderPair,
    f: ScalarField,
    g: ScalarField,
    *,
    method: str = DEFAULT_SOLVER,
    rel_tol: float = DEFAULT_SOLVER_TOL,
    workers: int = 1,
    quad_offset: int = 0,
) -> Solution:
    """-lap u = f in the domain, u = g on its boundary."""
    orders.check_supported()
    dofmap = build_global_dofmap(mesh, orders)
    elements = build_elements(mesh, orders, f, workers=workers, quad_offset=quad_offset)
    A, b = assemble(mesh, orders, f, dofmap=dofmap, elements=elements)
    system = apply_dirichlet(A, b, g, dofmap=dofmap)
    u = solve(system, rel_tol, method)
    logger.info(
        "solved k=%d m=%d: %d cells, %d dofs (%d free)",
        orders.k, orders.m, mesh.n_cells, dofmap.n_global, system.n_free,
    )
    return Solution(mesh=mesh, orders=orders, dofmap=dofmap, elements=elements, system=system, u=u)
