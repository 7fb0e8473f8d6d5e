import logging

import numpy as np

from src.errors import DegenerateCellError
from src.geometry import pairwise_distances, point_line_distance, polygon_centroid, signed_area
from src.mesh.types import ElementGeometry, Mesh, RegularityReport

logger = logging.getLogger(__name__)


def polygon_geometry(poly: np.ndarray, cell_index: int = -1) -> ElementGeometry:
    area = signed_area(poly)
    if area <= 0.0:
        raise DegenerateCellError(f"cell {cell_index} has non-positive area {area:.3e}", cell_index)
    x_K = polygon_centroid(poly)
    h_K = float(pairwise_distances(poly).max())
    n = len(poly)
    # Distance from the centroid to the edge lines; a lower bound on the
    # star-shapedness radius about x_K for convex cells.
    rho = min(point_line_distance(x_K, poly[i], poly[(i + 1) % n]) for i in range(n))
    return ElementGeometry(h_K=h_K, x_K=x_K, area=area, rho_K=min(rho, 0.5 * h_K), n_edges=n)


def element_geometry(mesh: Mesh, cell_index: int) -> ElementGeometry:
    return polygon_geometry(mesh.cell_coords(cell_index), cell_index)


def min_vertex_distance(poly: np.ndarray) -> float:
    d = pairwise_distances(poly)
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def check_regularity(mesh: Mesh, gamma0: float, gamma1: float) -> RegularityReport:
    """Measure the shape-regularity ratios of every cell and list the offenders."""
    ratios0 = np.empty(mesh.n_cells)
    ratios1 = np.empty(mesh.n_cells)
    sizes = np.empty(mesh.n_cells)
    for ci in range(mesh.n_cells):
        poly = mesh.cell_coords(ci)
        geo = polygon_geometry(poly, ci)
        sizes[ci] = geo.h_K
        ratios0[ci] = geo.rho_K / geo.h_K
        ratios1[ci] = min_vertex_distance(poly) / geo.h_K
    violations = tuple(int(i) for i in np.flatnonzero((ratios0 < gamma0) | (ratios1 < gamma1)))
    report = RegularityReport(
        gamma0_observed=float(ratios0.min()),
        gamma1_observed=float(ratios1.min()),
        quasi_uniformity=float(sizes.max() / sizes.min()),
        violations=violations,
    )
    if violations:
        logger.warning(
            "%d of %d cells violate gamma0=%g / gamma1=%g", len(violations), mesh.n_cells, gamma0, gamma1
        )
    return report
