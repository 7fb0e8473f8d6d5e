from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.config import MAX_K
from src.errors import ConfigError
from src.polyquad import edge_rules, monomial_exponents, n_monomials


@dataclass(frozen=True)
class OrderPair:
    """Boundary order k and interior moment order m of the local space."""

    k: int
    m: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not max(0, self.k - 2) <= self.m <= self.k:
            raise ConfigError(
                f"m must satisfy max(0, k-2) <= m <= k; got k={self.k}, m={self.m}"
            )

    @property
    def n_k(self) -> int:
        return n_monomials(self.k)

    @property
    def n_m(self) -> int:
        return n_monomials(self.m)

    def check_supported(self) -> None:
        if self.k > MAX_K:
            raise ConfigError(f"k={self.k} exceeds the supported maximum {MAX_K}")


@dataclass(frozen=True, eq=False)
class DofMap:
    """Degrees of freedom of one cell.

    Boundary dofs run edge by edge counterclockwise: vertex i has local index
    i*k, and the k-1 interior Gauss-Lobatto nodes of edge (i, i+1) follow it.
    Internal scaled moments come last in graded monomial order.
    """

    n_edges: int
    orders: OrderPair
    boundary_nodes: np.ndarray
    edge_dofs: np.ndarray
    moment_exponents: Tuple[Tuple[int, int], ...]

    @property
    def n_boundary(self) -> int:
        return self.n_edges * self.orders.k

    @property
    def n_internal(self) -> int:
        return len(self.moment_exponents)

    @property
    def n_dofs(self) -> int:
        return self.n_boundary + self.n_internal

    def internal(self, j: int) -> int:
        """Local index of the j-th internal moment dof."""
        return self.n_boundary + j


def dof_layout(cell: np.ndarray, orders: OrderPair) -> DofMap:
    cell = np.asarray(cell, dtype=float)
    k = orders.k
    n = len(cell)
    gl = edge_rules(k).gauss_lobatto_nodes
    params = 0.5 * (gl[:-1] + 1.0)  # start vertex plus interior nodes of each edge
    nodes = np.empty((n * k, 2))
    edge_dofs = np.empty((n, k + 1), dtype=int)
    for i in range(n):
        a, b = cell[i], cell[(i + 1) % n]
        nodes[i * k : (i + 1) * k] = a + np.outer(params, b - a)
        edge_dofs[i, :k] = np.arange(i * k, (i + 1) * k)
        edge_dofs[i, k] = ((i + 1) % n) * k
    return DofMap(
        n_edges=n,
        orders=orders,
        boundary_nodes=nodes,
        edge_dofs=edge_dofs,
        moment_exponents=monomial_exponents(orders.m),
    )
