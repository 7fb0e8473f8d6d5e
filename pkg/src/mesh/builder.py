"""Turn loose clipped polygons into a conforming, validated Mesh."""

import logging
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from src.config import AREA_TILING_TOL, SLIVER_AREA_RATIO, WELD_TOL
from src.errors import ConformityError, DegenerateCellError, MeshError
from src.geometry import (
    clip_to_rect,
    diameter,
    is_convex,
    is_simple,
    point_segment_distance,
    segment_parameter,
    signed_area,
)
from src.mesh.types import Cell, Domain, Edge, Mesh

logger = logging.getLogger(__name__)


def clip_to_domain(poly: np.ndarray, domain: Domain) -> List[np.ndarray]:
    """Clip a convex polygon to the domain, returning convex pieces.

    The L-shape is handled through its two rectangles. Pieces that together
    form a convex polygon are merged back (the polygon then only met the
    lower half of the domain); otherwise they stay separate cells.
    """
    rects = domain.rectangles
    if len(rects) == 1:
        piece = clip_to_rect(poly, rects[0])
        return [piece] if len(piece) and signed_area(piece) > 0.0 else []

    xmin, ymin, xmax, ymax = domain.bbox
    notch = (0.0, 0.0, xmax, ymax)
    in_notch = clip_to_rect(poly, notch)
    if len(in_notch) == 0 or signed_area(in_notch) <= 0.0:
        whole = clip_to_rect(poly, (xmin, ymin, xmax, ymax))
        return [whole] if len(whole) and signed_area(whole) > 0.0 else []

    pieces = []
    for rect in rects:
        piece = clip_to_rect(poly, rect)
        if len(piece) and signed_area(piece) > 0.0:
            pieces.append(piece)
    return pieces


def build_mesh(
    polygons: Sequence[np.ndarray],
    domain: Domain,
    *,
    nominal_area: float,
    sliver_ratio: float = SLIVER_AREA_RATIO,
    min_edge_ratio: float = 0.0,
    require_convex: bool = False,
    meta: Optional[Dict[str, float]] = None,
) -> Mesh:
    """Weld vertices, repair T-junctions, merge slivers, collapse short edges and validate.

    Edges shorter than ``min_edge_ratio`` times the diameter of a cell that
    owns them are collapsed to a single vertex.
    """
    polygons = [p for p in polygons if len(p) >= 3 and signed_area(p) > 0.0]
    if not polygons:
        raise MeshError("no cells left after clipping")
    vertices, cells = _weld(polygons, tol=WELD_TOL * domain.side)
    cells = _repair_t_junctions(vertices, cells, tol=WELD_TOL * domain.side)
    cells = _merge_slivers(vertices, cells, sliver_ratio * nominal_area, require_convex=require_convex)
    if min_edge_ratio > 0.0:
        vertices, cells = _collapse_short_edges(
            vertices, cells, min_edge_ratio, domain, require_convex=require_convex
        )
    vertices, cells = _compact(vertices, cells)
    mesh = Mesh(vertices=vertices, cells=tuple(cells), domain=domain, meta=dict(meta or {}))
    validate_mesh(mesh, require_convex=require_convex)
    return mesh


def _weld(polygons: Sequence[np.ndarray], tol: float) -> Tuple[np.ndarray, List[List[int]]]:
    coords = np.vstack(polygons)
    tree = cKDTree(coords)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    n = len(coords)
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else ([], ([], [])),
        shape=(n, n),
    )
    _, labels = connected_components(graph, directed=False)
    # Number welded groups by first occurrence so the result is order-stable.
    remap: Dict[int, int] = {}
    first: List[int] = []
    for i, label in enumerate(labels):
        if label not in remap:
            remap[label] = len(first)
            first.append(i)
    vertices = coords[first].copy()
    cells: List[List[int]] = []
    offset = 0
    for poly in polygons:
        ids = [remap[labels[offset + j]] for j in range(len(poly))]
        offset += len(poly)
        cleaned = [v for i, v in enumerate(ids) if v != ids[i - 1]]
        if len(cleaned) >= 3:
            cells.append(cleaned)
    return vertices, cells


def _repair_t_junctions(vertices: np.ndarray, cells: List[List[int]], tol: float) -> List[List[int]]:
    """Insert vertices that sit inside a neighbouring cell's edge."""
    tree = cKDTree(vertices)
    repaired = []
    for cell in cells:
        out: List[int] = []
        for a, b in zip(cell, cell[1:] + cell[:1]):
            out.append(a)
            pa, pb = vertices[a], vertices[b]
            mid = 0.5 * (pa + pb)
            radius = 0.5 * float(np.hypot(*(pb - pa))) + tol
            hits = []
            for v in tree.query_ball_point(mid, radius):
                if v in (a, b):
                    continue
                if point_segment_distance(vertices[v], pa, pb) <= tol:
                    t = segment_parameter(vertices[v], pa, pb)
                    if 0.0 < t < 1.0:
                        hits.append((t, v))
            out.extend(v for _, v in sorted(hits))
        repaired.append(out)
    return repaired


def _merge_slivers(
    vertices: np.ndarray, cells: List[List[int]], min_area: float, *, require_convex: bool = False
) -> List[List[int]]:
    cells = [list(c) for c in cells]
    while True:
        areas = [signed_area(vertices[c]) for c in cells]
        slivers = [i for i, a in enumerate(areas) if a < min_area]
        if not slivers:
            return cells
        target = slivers[0]
        unions = []
        for other in _neighbors_by_shared_length(vertices, cells, target):
            union = _merge_cycles(cells[target], cells[other])
            if union is not None and is_simple(vertices[union]):
                unions.append((not is_convex(vertices[union]), other, union))
        if require_convex:
            unions = [u for u in unions if not u[0]]
        if not unions:
            raise DegenerateCellError(
                f"sliver cell with area {areas[target]:.3e} has no mergeable neighbour", target
            )
        # Convex unions first, then the longest shared edge.
        _, other, union = min(unions, key=lambda u: u[0])
        logger.warning("merged sliver cell (area %.3e) into neighbour %d", areas[target], other)
        cells[other] = union
        cells.pop(target)


def _collapse_short_edges(
    vertices: np.ndarray,
    cells: List[List[int]],
    ratio: float,
    domain: Domain,
    *,
    require_convex: bool = False,
) -> Tuple[np.ndarray, List[List[int]]]:
    vertices = vertices.copy()
    cells = [list(c) for c in cells]
    collapsed = 0
    while True:
        incident: Dict[int, Set[int]] = {}
        candidates = set()
        for ci, cell in enumerate(cells):
            for v in cell:
                incident.setdefault(v, set()).add(ci)
            limit = ratio * diameter(vertices[cell])
            for a, b in zip(cell, cell[1:] + cell[:1]):
                length = float(np.hypot(*(vertices[b] - vertices[a])))
                if length < limit:
                    candidates.add((length, min(a, b), max(a, b)))

        touched: Set[int] = set()
        progress = False
        for _, a, b in sorted(candidates):
            if a in touched or b in touched:
                continue
            target = _collapse_target(vertices[a], vertices[b], domain)
            if target is None:
                continue
            affected = incident[a] | incident[b]
            trial = {ci: _replace_vertex(cells[ci], b, a) for ci in affected}
            saved = vertices[a].copy()
            vertices[a] = target
            if all(_acceptable(vertices[c], require_convex) for c in trial.values() if len(c) >= 3):
                for ci, cell in trial.items():
                    cells[ci] = cell
                touched.update(v for ci in affected for v in cells[ci])
                touched.add(b)
                collapsed += 1
                progress = True
            else:
                vertices[a] = saved
        cells = [c for c in cells if len(c) >= 3]
        if not progress:
            if collapsed:
                logger.info("collapsed %d short edges", collapsed)
            return vertices, cells


def _collapse_target(pa: np.ndarray, pb: np.ndarray, domain: Domain) -> Optional[np.ndarray]:
    """Position of the merged vertex; None when the pair must stay apart."""
    corner_a = _is_domain_corner(pa, domain)
    corner_b = _is_domain_corner(pb, domain)
    if corner_a and corner_b:
        return None
    if corner_a:
        return pa.copy()
    if corner_b:
        return pb.copy()
    on_a = domain.on_boundary(pa)
    on_b = domain.on_boundary(pb)
    if on_a and not on_b:
        return pa.copy()
    if on_b and not on_a:
        return pb.copy()
    mid = 0.5 * (pa + pb)
    if on_a and not domain.on_boundary(mid):
        return None
    return mid


def _is_domain_corner(p: np.ndarray, domain: Domain) -> bool:
    return bool(np.hypot(*(domain.boundary - p).T).min() <= WELD_TOL * domain.side)


def _replace_vertex(cell: List[int], old: int, new: int) -> List[int]:
    out = [new if v == old else v for v in cell]
    return [v for i, v in enumerate(out) if v != out[i - 1]]


def _acceptable(coords: np.ndarray, require_convex: bool) -> bool:
    if signed_area(coords) <= 0.0 or not is_simple(coords):
        return False
    return is_convex(coords) or not require_convex


def _neighbors_by_shared_length(vertices: np.ndarray, cells: List[List[int]], target: int) -> List[int]:
    edges = {(a, b) for a, b in zip(cells[target], cells[target][1:] + cells[target][:1])}
    shared: Dict[int, float] = {}
    for ci, cell in enumerate(cells):
        if ci == target:
            continue
        for a, b in zip(cell, cell[1:] + cell[:1]):
            if (b, a) in edges:
                shared[ci] = shared.get(ci, 0.0) + float(np.hypot(*(vertices[b] - vertices[a])))
    return sorted(shared, key=lambda ci: -shared[ci])


def _merge_cycles(first: List[int], second: List[int]) -> Optional[List[int]]:
    """Union of two edge-adjacent cycles; None when the union is not a single loop."""
    edges = [(a, b) for a, b in zip(first, first[1:] + first[:1])]
    edges += [(a, b) for a, b in zip(second, second[1:] + second[:1])]
    edge_set = set(edges)
    kept = [e for e in edges if (e[1], e[0]) not in edge_set]
    successor: Dict[int, int] = {}
    for a, b in kept:
        if a in successor:
            return None
        successor[a] = b
    if not kept:
        return None
    start = kept[0][0]
    cycle = [start]
    current = successor[start]
    while current != start:
        cycle.append(current)
        current = successor.get(current)
        if current is None or len(cycle) > len(kept):
            return None
    return cycle if len(cycle) == len(kept) else None


def _compact(vertices: np.ndarray, cells: List[List[int]]) -> Tuple[np.ndarray, List[Cell]]:
    used: Dict[int, int] = {}
    for cell in cells:
        for v in cell:
            if v not in used:
                used[v] = len(used)
    order = sorted(used, key=used.get)
    return vertices[order].copy(), [tuple(used[v] for v in cell) for cell in cells]


def validate_mesh(mesh: Mesh, *, require_convex: bool = False) -> None:
    """Check the tessellation invariants; raise MeshError on the first failure."""
    total = 0.0
    for ci, cell in enumerate(mesh.cells):
        if len(cell) < 3 or len(set(cell)) != len(cell):
            raise DegenerateCellError(f"cell {ci} needs at least 3 distinct vertices", ci)
        coords = mesh.vertices[list(cell)]
        area = signed_area(coords)
        if area <= 0.0:
            raise DegenerateCellError(f"cell {ci} is degenerate or clockwise (area {area:.3e})", ci)
        if not is_simple(coords):
            raise DegenerateCellError(f"cell {ci} is self-intersecting", ci)
        if require_convex and not is_convex(coords):
            raise DegenerateCellError(f"cell {ci} is not convex", ci)
        total += area
    if abs(total - mesh.domain.area) > AREA_TILING_TOL * mesh.domain.area:
        raise MeshError(f"cells cover area {total:.15g}, domain area is {mesh.domain.area:g}")

    seen: Dict[Edge, int] = {}
    for ci, cell in enumerate(mesh.cells):
        for a, b in zip(cell, cell[1:] + cell[:1]):
            if (a, b) in seen:
                raise ConformityError(f"edge ({a}, {b}) appears twice with the same orientation")
            seen[(a, b)] = ci
    for a, b in mesh.boundary_edges:
        mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        for p in (mesh.vertices[a], mesh.vertices[b], mid):
            if not mesh.domain.on_boundary(p):
                raise ConformityError(
                    f"unmatched edge ({a}, {b}) of cell {seen[(a, b)]} does not lie on the boundary"
                )
