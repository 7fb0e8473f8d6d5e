import numpy as np
import pytest

from src.mesh import Domain, generate_hex_mesh
from src.vem.dofs import OrderPair

ORDER_PAIRS = [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 1), (3, 3), (4, 2), (4, 4)]


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0), phase: float = 0.1) -> np.ndarray:
    t = phase + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack((center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)))


UNIT_SQUARE_CELL = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
HEXAGON_CELL = regular_polygon(6, radius=0.4, center=(0.3, 0.2))
# Nonconvex, star-shaped with respect to a ball around its centroid.
ARROW_CELL = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, 0.7], [0.0, 1.0]])
CELLS = {"square": UNIT_SQUARE_CELL, "hexagon": HEXAGON_CELL, "arrow": ARROW_CELL}


@pytest.fixture(params=ORDER_PAIRS, ids=lambda km: f"k{km[0]}m{km[1]}")
def orders(request) -> OrderPair:
    return OrderPair(*request.param)


@pytest.fixture(params=sorted(CELLS))
def cell(request) -> np.ndarray:
    return CELLS[request.param]


@pytest.fixture(scope="session")
def hex_square_2():
    return generate_hex_mesh(Domain.UNIT_SQUARE, 2)


@pytest.fixture(scope="session")
def hex_lshape_1():
    return generate_hex_mesh(Domain.L_SHAPE, 1)
