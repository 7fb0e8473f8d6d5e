import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from src.config import (
    CSV_HEADER,
    DEFAULT_GAMMA0,
    DEFAULT_GAMMA1,
    DEFAULT_LEVELS,
    DEFAULT_SEED,
    DEFAULT_SOLVER,
    DEFAULT_SOLVER_TOL,
    MAX_K,
    MIN_LEVELS,
    RATE_WINDOW,
)
from src.errors import ConfigError, LevelError, VemError
from src.mesh import MESH_FAMILIES, check_regularity, family_mesh
from src.postproc import compute_errors
from src.render import plot_convergence
from src.study.problems import PROBLEMS, TestProblem, make_test_problem
from src.study.rates import estimate_rate
from src.system import SOLVERS, solve_problem
from src.vem.dofs import OrderPair

logger = logging.getLogger(__name__)

REGIONS = ("global", "inner", "outer")


@dataclass
class StudyConfig:
    problem: str = "square"
    family: str = "hex"
    k: int = 1
    m: Optional[int] = None  # defaults to k
    levels: int = DEFAULT_LEVELS
    first_level: int = 2
    rng_seed: int = DEFAULT_SEED
    solver: str = DEFAULT_SOLVER
    tol: float = DEFAULT_SOLVER_TOL
    out_dir: Optional[Path] = None
    plot: bool = True
    deterministic: bool = False
    workers: int = 1
    quad_offset: int = 0
    gamma0: float = DEFAULT_GAMMA0
    gamma1: float = DEFAULT_GAMMA1

    @property
    def orders(self) -> OrderPair:
        return OrderPair(self.k, self.k if self.m is None else self.m)

    @property
    def level_range(self) -> range:
        return range(self.first_level, self.first_level + self.levels)

    @property
    def stem(self) -> str:
        orders = self.orders
        return f"{self.problem}_{self.family}_k{orders.k}_m{orders.m}"

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.family not in MESH_FAMILIES:
            raise ConfigError(f"unknown mesh family {self.family!r}; choose from {sorted(MESH_FAMILIES)}")
        if not 1 <= self.k <= MAX_K:
            raise ConfigError(f"k must lie in [1, {MAX_K}], got {self.k}")
        self.orders.check_supported()
        if self.levels < MIN_LEVELS:
            raise ConfigError(f"a study needs at least {MIN_LEVELS} levels, got {self.levels}")
        if self.first_level < 1:
            raise ConfigError(f"first level must be >= 1, got {self.first_level}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if not self.tol > 0.0:
            raise ConfigError(f"solver tolerance must be positive, got {self.tol}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.quad_offset < 0:
            raise ConfigError(f"quadrature offset must be >= 0, got {self.quad_offset}")


@dataclass(frozen=True)
class StudyRow:
    level: int
    h: float
    ndof: int
    e1_global: float
    e1_inner: float
    e1_outer: float
    runtime_s: float
    l2_global: float = float("nan")

    def csv_line(self) -> str:
        return (
            f"{self.level},{self.h:.17g},{self.ndof},{self.e1_global:.17g},"
            f"{self.e1_inner:.17g},{self.e1_outer:.17g},{self.runtime_s:.6f}"
        )


@dataclass
class ConvergenceTable:
    problem: str
    k: int
    m: int
    expected_global: float
    expected_local: float
    rows: List[StudyRow] = field(default_factory=list)
    slopes: Dict[str, float] = field(default_factory=dict)

    def append(self, row: StudyRow) -> None:
        if self.rows and not row.h < self.rows[-1].h:
            logger.warning(
                "mesh size did not decrease at level %d (%.4g after %.4g)", row.level, row.h, self.rows[-1].h
            )
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def fit(self, window: int = RATE_WINDOW) -> Dict[str, float]:
        h = self.column("h")
        self.slopes = {
            region: estimate_rate(h, self.column(f"e1_{region}"), window) for region in REGIONS
        }
        return self.slopes

    def slope_line(self) -> str:
        return "# slopes " + " ".join(f"{r}={self.slopes[r]:.4f}" for r in REGIONS)

    def write_csv(self, path: Path) -> None:
        lines = [CSV_HEADER] + [r.csv_line() for r in self.rows]
        if self.slopes:
            lines.append(self.slope_line())
        Path(path).write_text("\n".join(lines) + "\n")

    def format(self) -> str:
        lines = [
            f"{self.problem}: k={self.k} m={self.m}",
            f"{'level':>5} {'h':>10} {'ndof':>8} {'global':>11} {'inner':>11} {'outer':>11} {'time[s]':>8}",
        ]
        for r in self.rows:
            lines.append(
                f"{r.level:>5} {r.h:>10.4e} {r.ndof:>8} {r.e1_global:>11.4e} "
                f"{r.e1_inner:>11.4e} {r.e1_outer:>11.4e} {r.runtime_s:>8.2f}"
            )
        if self.slopes:
            lines.append(
                "slopes: "
                + ", ".join(f"{r} {self.slopes[r]:.3f}" for r in REGIONS)
                + f"  (expected global {self.expected_global:.3g}, local {self.expected_local:.3g})"
            )
        return "\n".join(lines)


def _run_level(config: StudyConfig, problem: TestProblem, level: int) -> StudyRow:
    orders = config.orders
    workers = 1 if config.deterministic else config.workers
    start = time.perf_counter()
    mesh = family_mesh(config.family, problem.domain, level, rng_seed=config.rng_seed)
    check_regularity(mesh, config.gamma0, config.gamma1)
    solution = solve_problem(
        mesh,
        orders,
        problem.f,
        problem.g,
        method=config.solver,
        rel_tol=config.tol,
        workers=workers,
        quad_offset=config.quad_offset,
    )
    report = compute_errors(
        mesh,
        orders,
        solution.u,
        problem.exact,
        problem.subdomain,
        cell_dofs=solution.dofmap.cell_dofs,
        elements=solution.elements,
        quad_offset=config.quad_offset,
        singular_point=problem.singular_point,
        workers=workers,
    )
    runtime = 0.0 if config.deterministic else time.perf_counter() - start
    return StudyRow(
        level=level,
        h=mesh.h,
        ndof=solution.ndof,
        e1_global=report.e1_global,
        e1_inner=report.e1_inner,
        e1_outer=report.e1_outer,
        runtime_s=runtime,
        l2_global=report.l2_global,
    )


def run_study(config: StudyConfig) -> ConvergenceTable:
    """Solve the problem on successively refined meshes and fit convergence slopes.

    With an output directory, the CSV is rewritten after every level so a
    failing level leaves the finished rows behind.
    """
    config.validate()
    problem = make_test_problem(config.problem)
    problem.subdomain.check_inside(problem.domain)
    orders = config.orders
    table = ConvergenceTable(
        problem=problem.name,
        k=orders.k,
        m=orders.m,
        expected_global=problem.expected_global_rate(orders.k),
        expected_local=problem.expected_local_rate(orders.k),
    )
    csv_path = out_dir = None
    if config.out_dir is not None:
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{config.stem}.csv"

    for level in config.level_range:
        try:
            row = _run_level(config, problem, level)
        except VemError as exc:
            if csv_path is not None:
                table.write_csv(csv_path)
            raise LevelError(level, exc) from exc
        table.append(row)
        logger.info(
            "level %d: h=%.4g ndof=%d e_global=%.4e e_inner=%.4e e_outer=%.4e (%.2fs)",
            row.level, row.h, row.ndof, row.e1_global, row.e1_inner, row.e1_outer, row.runtime_s,
        )
        if csv_path is not None:
            table.write_csv(csv_path)

    table.fit()
    if csv_path is not None:
        table.write_csv(csv_path)
        if config.plot:
            plot_convergence(table, out_dir / f"{config.stem}.svg")
    return table
