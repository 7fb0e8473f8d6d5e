import math
from typing import List, Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry import LinearRing, Polygon

Point = Tuple[float, float]
Rect = Tuple[float, float, float, float]  # xmin, ymin, xmax, ymax


def signed_area(poly: np.ndarray) -> float:
    """Shoelace area, positive for counterclockwise vertex order."""
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    x = poly[:, 0]
    y = poly[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        return poly.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def pairwise_distances(poly: np.ndarray) -> np.ndarray:
    diff = poly[:, None, :] - poly[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def diameter(poly: np.ndarray) -> float:
    return float(pairwise_distances(poly).max())


def edge_vectors(poly: np.ndarray) -> np.ndarray:
    return np.roll(poly, -1, axis=0) - poly


def is_convex(poly: np.ndarray, tol: float = 1e-12) -> bool:
    edges = edge_vectors(poly)
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    scale = np.hypot(edges[:, 0], edges[:, 1]) * np.hypot(nxt[:, 0], nxt[:, 1])
    return bool(np.all(cross >= -tol * scale))


def is_simple(poly: np.ndarray) -> bool:
    if len(poly) < 3:
        return False
    return bool(LinearRing(poly).is_simple)


def point_line_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    return abs(d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0])) / math.hypot(d[0], d[1])


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    length2 = float(d @ d)
    t = 0.0 if length2 == 0.0 else float(np.clip((p - a) @ d / length2, 0.0, 1.0))
    closest = a + t * d
    return math.hypot(p[0] - closest[0], p[1] - closest[1])


def segment_parameter(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    return float((p - a) @ d / (d @ d))


def point_in_polygon(p: Sequence[float], poly: np.ndarray) -> bool:
    """Strict interior test; boundary points are outside."""
    return bool(shapely.contains_xy(Polygon(poly), p[0], p[1]))


def clip_to_rect(poly: np.ndarray, rect: Rect) -> np.ndarray:
    """Sutherland-Hodgman clipping of a polygon against an axis-aligned rectangle.

    Intersection points get the clip coordinate assigned exactly, so clipped
    vertices lie on the rectangle sides without rounding.
    """
    xmin, ymin, xmax, ymax = rect
    # (axis, bound, keep_greater)
    planes = ((0, xmin, True), (0, xmax, False), (1, ymin, True), (1, ymax, False))
    output: List[np.ndarray] = [np.asarray(p, dtype=float) for p in poly]
    for axis, bound, keep_greater in planes:
        if not output:
            break
        source = output
        output = []

        def inside(pt: np.ndarray) -> bool:
            return pt[axis] >= bound if keep_greater else pt[axis] <= bound

        prev = source[-1]
        for cur in source:
            if inside(cur):
                if not inside(prev):
                    output.append(_cross_plane(prev, cur, axis, bound))
                output.append(cur)
            elif inside(prev):
                output.append(_cross_plane(prev, cur, axis, bound))
            prev = cur
    if len(output) < 3:
        return np.empty((0, 2))
    return dedupe_ring(np.array(output))


def _cross_plane(a: np.ndarray, b: np.ndarray, axis: int, bound: float) -> np.ndarray:
    # Parametrize from the endpoint with the smaller coordinate so both sides agree.
    if a[axis] > b[axis]:
        a, b = b, a
    t = (bound - a[axis]) / (b[axis] - a[axis])
    other = 1 - axis
    point = np.empty(2)
    point[axis] = bound
    point[other] = a[other] + t * (b[other] - a[other])
    return point


def dedupe_ring(poly: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Drop consecutive repeated vertices (including the wrap-around pair)."""
    if len(poly) == 0:
        return poly
    scale = max(1.0, float(np.abs(poly).max()))
    keep: List[np.ndarray] = []
    for p in poly:
        if not keep or np.abs(p - keep[-1]).max() > tol * scale:
            keep.append(p)
    while len(keep) > 1 and np.abs(keep[0] - keep[-1]).max() <= tol * scale:
        keep.pop()
    return np.array(keep)


def segment_hits_disk(a: np.ndarray, b: np.ndarray, center: np.ndarray, radius: float) -> bool:
    return point_segment_distance(center, a, b) <= radius


def ear_clip(poly: np.ndarray) -> List[Tuple[int, int, int]]:
    """Triangulate a simple counterclockwise polygon by ear clipping."""
    remaining = list(range(len(poly)))
    triangles: List[Tuple[int, int, int]] = []
    while len(remaining) > 3:
        n = len(remaining)
        crosses = []
        clipped = False
        for idx in range(n):
            i0, i1, i2 = remaining[idx - 1], remaining[idx], remaining[(idx + 1) % n]
            a, b, c = poly[i0], poly[i1], poly[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            crosses.append(cross)
            if cross <= 0.0:
                continue
            tri = np.array([a, b, c])
            tol = 1e-12 * cross
            if any(
                _in_closed_triangle(poly[j], tri, tol)
                for j in remaining
                if j not in (i0, i1, i2)
            ):
                continue
            triangles.append((i0, i1, i2))
            remaining.pop(idx)
            clipped = True
            break
        if clipped:
            continue
        # No strict ear left: a flat vertex can go without losing area.
        scale = float(np.abs(poly).max()) ** 2
        flat = [idx for idx, cross in enumerate(crosses) if abs(cross) <= 1e-14 * scale]
        if not flat:
            raise ValueError("ear clipping failed: polygon is not simple")
        remaining.pop(flat[0])
    triangles.append((remaining[0], remaining[1], remaining[2]))
    return triangles


def _in_closed_triangle(p: np.ndarray, tri: np.ndarray, tol: float) -> bool:
    # A reflex vertex sitting on the diagonal blocks the ear as well.
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) < -tol:
            return False
    return True
