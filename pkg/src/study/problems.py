"""Model problems with known solutions.

``square`` and ``lshape`` carry the corner singularity r^(2/3) sin(2 theta/3)
centred at the origin, which is a corner of the unit square and the
re-entrant corner of the L-shape. ``smooth`` is a manufactured analytic
solution; polynomial patch problems are reproduced exactly by the method.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from src.config import SUBDOMAIN_RADIUS
from src.errors import ConfigError
from src.mesh.types import Domain
from src.postproc import Subdomain

ScalarField = Callable[[np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray], np.ndarray]
RateRule = Callable[[int], float]


@dataclass(frozen=True, eq=False)
class TestProblem:
    __test__ = False  # keep pytest from collecting it

    name: str
    domain: Domain
    exact_u: ScalarField
    exact_grad_u: VectorField
    f: ScalarField
    subdomain: Subdomain
    global_rate: RateRule
    local_rate: RateRule
    singular_point: Optional[Tuple[float, float]] = None

    @property
    def g(self) -> ScalarField:
        return self.exact_u

    @property
    def exact(self) -> Tuple[ScalarField, VectorField]:
        return self.exact_u, self.exact_grad_u

    def expected_global_rate(self, k: int) -> float:
        return self.global_rate(k)

    def expected_local_rate(self, k: int) -> float:
        return self.local_rate(k)


def corner_angle(points: np.ndarray, domain: Domain) -> np.ndarray:
    """Polar angle, continuous on the domain.

    On the unit square this is atan2(y, x) in [0, pi/2]. On the L-shape the
    branch cut runs along the boundary edge y = 0, x > 0 and the angle takes
    values in (0, 2 pi], with 2 pi on that edge.
    """
    theta = np.arctan2(points[:, 1], points[:, 0])
    if domain is Domain.L_SHAPE:
        theta = np.where(theta <= 0.0, theta + 2.0 * np.pi, theta)
    return theta


def _corner_solution(domain: Domain) -> Tuple[ScalarField, VectorField]:
    def u(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        r = np.hypot(points[:, 0], points[:, 1])
        return r ** (2.0 / 3.0) * np.sin(2.0 * corner_angle(points, domain) / 3.0)

    def grad_u(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        r = np.hypot(points[:, 0], points[:, 1])
        theta = corner_angle(points, domain)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = (2.0 / 3.0) * r ** (-1.0 / 3.0)
        return np.column_stack((-scale * np.sin(theta / 3.0), scale * np.cos(theta / 3.0)))

    return u, grad_u


def _zero(points: np.ndarray) -> np.ndarray:
    return np.zeros(len(np.atleast_2d(points)))


def default_subdomain(domain: Domain) -> Subdomain:
    """The disk the local errors are measured on, away from the corner at the origin."""
    center = (0.5, 0.5) if domain is Domain.UNIT_SQUARE else (-0.5, -0.5)
    return Subdomain(center=center, radius=SUBDOMAIN_RADIUS)


def _corner_problem(name: str, domain: Domain) -> TestProblem:
    u, grad_u = _corner_solution(domain)
    local = (lambda k: float(k)) if domain is Domain.UNIT_SQUARE else (lambda k: min(4.0 / 3.0, k))
    return TestProblem(
        name=name,
        domain=domain,
        exact_u=u,
        exact_grad_u=grad_u,
        f=_zero,
        subdomain=default_subdomain(domain),
        global_rate=lambda k: 0.5,
        local_rate=local,
        singular_point=(0.0, 0.0),
    )


def _smooth_problem() -> TestProblem:
    def u(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.sin(np.pi * points[:, 0]) * np.sin(np.pi * points[:, 1])

    def grad_u(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        sx, sy = np.sin(np.pi * points[:, 0]), np.sin(np.pi * points[:, 1])
        cx, cy = np.cos(np.pi * points[:, 0]), np.cos(np.pi * points[:, 1])
        return np.pi * np.column_stack((cx * sy, sx * cy))

    return TestProblem(
        name="smooth",
        domain=Domain.UNIT_SQUARE,
        exact_u=u,
        exact_grad_u=grad_u,
        f=lambda points: 2.0 * np.pi**2 * u(points),
        subdomain=default_subdomain(Domain.UNIT_SQUARE),
        global_rate=float,
        local_rate=float,
    )


PROBLEMS = {
    "square": lambda: _corner_problem("square", Domain.UNIT_SQUARE),
    "lshape": lambda: _corner_problem("lshape", Domain.L_SHAPE),
    "smooth": _smooth_problem,
}


def make_test_problem(problem_id: str) -> TestProblem:
    if problem_id not in PROBLEMS:
        raise ConfigError(f"unknown problem {problem_id!r}; choose from {sorted(PROBLEMS)}")
    return PROBLEMS[problem_id]()


def make_polynomial_problem(k: int, domain: Domain = Domain.UNIT_SQUARE) -> TestProblem:
    """u = 1 + x/2 - y/4 + 0.3 ((x + 2y) / 3)^k, a degree-k polynomial the method reproduces.

    The inner argument stays within [-1, 1] on both domains.
    """
    if k < 1:
        raise ConfigError(f"polynomial degree must be >= 1, got {k}")

    def u(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        s = (points[:, 0] + 2.0 * points[:, 1]) / 3.0
        return 1.0 + 0.5 * points[:, 0] - 0.25 * points[:, 1] + 0.3 * s**k

    def grad_u(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        ds = 0.1 * k * ((points[:, 0] + 2.0 * points[:, 1]) / 3.0) ** (k - 1)
        return np.column_stack((0.5 + ds, -0.25 + 2.0 * ds))

    def f(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if k < 2:
            return np.zeros(len(points))
        s = (points[:, 0] + 2.0 * points[:, 1]) / 3.0
        return -0.3 * (5.0 / 9.0) * k * (k - 1) * s ** (k - 2)

    return TestProblem(
        name=f"poly{k}",
        domain=domain,
        exact_u=u,
        exact_grad_u=grad_u,
        f=f,
        subdomain=default_subdomain(domain),
        global_rate=float,
        local_rate=float,
    )
