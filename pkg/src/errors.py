from typing import Optional, Sequence

from src.config import EXIT_CONFIG, EXIT_MESH, EXIT_SOLVER


class VemError(Exception):
    """Base class for every failure the command line maps to an exit code."""

    exit_code = 1


class ConfigError(VemError, ValueError):
    exit_code = EXIT_CONFIG


class RateError(VemError, ValueError):
    """Convergence rates requested on data that cannot carry a slope."""

    exit_code = EXIT_CONFIG


class MeshError(VemError):
    exit_code = EXIT_MESH


class DegenerateCellError(MeshError):
    def __init__(self, message: str, cell: Optional[int] = None) -> None:
        super().__init__(message)
        self.cell = cell


class ConformityError(MeshError):
    pass


class MeshFormatError(MeshError):
    pass


class QuadratureError(VemError):
    exit_code = EXIT_SOLVER


class SolverError(VemError):
    exit_code = EXIT_SOLVER

    def __init__(self, message: str, residual: float = float("nan")) -> None:
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


class EvaluationError(VemError):
    exit_code = EXIT_SOLVER

    def __init__(self, message: str, cell: int, point: Sequence[float]) -> None:
        super().__init__(f"{message} in cell {cell} at ({point[0]:.17g}, {point[1]:.17g})")
        self.cell = cell
        self.point = tuple(point)


class LevelError(VemError):
    """Wraps a failure raised while a study level was running."""

    def __init__(self, level: int, cause: VemError) -> None:
        super().__init__(f"level {level}: {cause}")
        self.level = level
        self.cause = cause
        self.exit_code = cause.exit_code
