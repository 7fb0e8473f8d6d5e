from .problems import PROBLEMS, TestProblem, default_subdomain, make_polynomial_problem, make_test_problem
from .rates import estimate_rate
from .runner import ConvergenceTable, StudyConfig, StudyRow, run_study

__all__ = [
    "PROBLEMS",
    "ConvergenceTable",
    "StudyConfig",
    "StudyRow",
    "TestProblem",
    "default_subdomain",
    "estimate_rate",
    "make_polynomial_problem",
    "make_test_problem",
    "run_study",
]
