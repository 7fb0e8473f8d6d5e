from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np

from src.geometry import Rect, diameter, point_in_polygon, point_segment_distance

Cell = Tuple[int, ...]
Edge = Tuple[int, int]


class Domain(Enum):
    UNIT_SQUARE = "square"
    L_SHAPE = "lshape"

    @property
    def boundary(self) -> np.ndarray:
        """Counterclockwise boundary vertices."""
        if self is Domain.UNIT_SQUARE:
            return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        return np.array(
            [[-1.0, -1.0], [1.0, -1.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [-1.0, 1.0]]
        )

    @property
    def rectangles(self) -> List[Rect]:
        """Convex decomposition used for clipping."""
        if self is Domain.UNIT_SQUARE:
            return [(0.0, 0.0, 1.0, 1.0)]
        return [(-1.0, -1.0, 0.0, 1.0), (0.0, -1.0, 1.0, 0.0)]

    @property
    def bbox(self) -> Rect:
        pts = self.boundary
        return (pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max())

    @property
    def side(self) -> float:
        xmin, _, xmax, _ = self.bbox
        return xmax - xmin

    @property
    def area(self) -> float:
        return 1.0 if self is Domain.UNIT_SQUARE else 3.0

    def contains(self, point: np.ndarray) -> bool:
        """Open-set membership; boundary points are outside."""
        return point_in_polygon(point, self.boundary)

    def boundary_distance(self, point: np.ndarray) -> float:
        pts = self.boundary
        return min(
            point_segment_distance(np.asarray(point, dtype=float), pts[i], pts[(i + 1) % len(pts)])
            for i in range(len(pts))
        )

    def on_boundary(self, point: np.ndarray, tol: float = 1e-12) -> bool:
        return self.boundary_distance(point) <= tol * self.side


@dataclass(frozen=True)
class ElementGeometry:
    h_K: float
    x_K: np.ndarray
    area: float
    rho_K: float
    n_edges: int


@dataclass(frozen=True)
class RegularityReport:
    gamma0_observed: float
    gamma1_observed: float
    quasi_uniformity: float
    violations: Tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True, eq=False)
class Mesh:
    """Polygonal tessellation: vertex coordinates and counterclockwise index cycles."""

    vertices: np.ndarray
    cells: Tuple[Cell, ...]
    domain: Domain
    meta: Dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def cell_coords(self, index: int) -> np.ndarray:
        return self.vertices[list(self.cells[index])]

    @cached_property
    def h(self) -> float:
        return max(diameter(self.cell_coords(i)) for i in range(self.n_cells))

    @cached_property
    def directed_edges(self) -> Dict[Edge, int]:
        """Map each directed edge (a, b) to the cell that owns it."""
        owner: Dict[Edge, int] = {}
        for ci, cell in enumerate(self.cells):
            for a, b in zip(cell, cell[1:] + cell[:1]):
                owner[(a, b)] = ci
        return owner

    @cached_property
    def boundary_edges(self) -> Tuple[Edge, ...]:
        return tuple(e for e in self.directed_edges if (e[1], e[0]) not in self.directed_edges)

    @cached_property
    def boundary_vertices(self) -> frozenset:
        return frozenset(v for e in self.boundary_edges for v in e)
