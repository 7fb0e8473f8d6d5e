import numpy as np
import pytest

from src.config import CSV_HEADER
from src.errors import ConfigError, RateError
from src.mesh import Domain, family_mesh
from src.postproc import compute_errors
from src.study import (
    ConvergenceTable,
    StudyConfig,
    estimate_rate,
    make_polynomial_problem,
    make_test_problem,
    run_study,
)
from src.study.problems import corner_angle
from src.system import solve_problem
from src.vem import OrderPair


def finite_difference_gradient(u, points, step=1e-6):
    ex, ey = np.array([step, 0.0]), np.array([0.0, step])
    return np.column_stack(
        ((u(points + ex) - u(points - ex)) / (2 * step), (u(points + ey) - u(points - ey)) / (2 * step))
    )


def test_corner_solution_values():
    u = make_test_problem("square").exact_u
    np.testing.assert_allclose(u(np.array([[1.0, 0.0], [0.0, 1.0]])), [0.0, np.sin(np.pi / 3)], atol=1e-15)
    lshape = make_test_problem("lshape").exact_u
    # Angle 2 pi on the edge y = 0, x > 0.
    assert lshape(np.array([[0.5, 0.0]]))[0] == pytest.approx(-(0.5 ** (2 / 3)) * np.sqrt(3) / 2, rel=1e-12)
    assert lshape(np.array([[-0.5, 0.0]]))[0] == pytest.approx(0.5 ** (2 / 3) * np.sin(2 * np.pi / 3), rel=1e-12)


def test_corner_angle_branches():
    points = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    np.testing.assert_allclose(corner_angle(points, Domain.L_SHAPE), [2 * np.pi, np.pi / 2, np.pi, 1.5 * np.pi])
    np.testing.assert_allclose(corner_angle(points[:2], Domain.UNIT_SQUARE), [0.0, np.pi / 2])


@pytest.mark.parametrize(
    ("problem_id", "point"),
    [("square", (0.3, 0.4)), ("lshape", (-0.3, -0.4)), ("lshape", (0.3, -0.4)), ("lshape", (-0.7, 0.2))],
)
def test_corner_gradient_matches_finite_differences(problem_id, point):
    problem = make_test_problem(problem_id)
    points = np.array([point])
    np.testing.assert_allclose(
        problem.exact_grad_u(points), finite_difference_gradient(problem.exact_u, points), rtol=1e-6
    )


@pytest.mark.parametrize("problem_id", ["square", "lshape"])
def test_corner_solution_is_harmonic(problem_id):
    problem = make_test_problem(problem_id)
    step = 1e-3
    points = np.array([[0.4, 0.3], [0.6, 0.8]]) if problem_id == "square" else np.array([[-0.4, -0.6], [0.5, -0.5]])
    u = problem.exact_u
    laplacian = sum(
        (u(points + e) - 2 * u(points) + u(points - e)) / step**2
        for e in (np.array([step, 0.0]), np.array([0.0, step]))
    )
    np.testing.assert_allclose(laplacian, 0.0, atol=1e-4)
    np.testing.assert_array_equal(problem.f(points), 0.0)


def test_smooth_and_polynomial_sources():
    smooth = make_test_problem("smooth")
    points = np.array([[0.25, 0.5], [0.1, 0.9]])
    np.testing.assert_allclose(smooth.f(points), 2 * np.pi**2 * smooth.exact_u(points))
    poly = make_polynomial_problem(3)
    np.testing.assert_allclose(
        poly.exact_grad_u(points), finite_difference_gradient(poly.exact_u, points), rtol=1e-7
    )
    step = 1e-3
    laplacian = sum(
        (poly.exact_u(points + e) - 2 * poly.exact_u(points) + poly.exact_u(points - e)) / step**2
        for e in (np.array([step, 0.0]), np.array([0.0, step]))
    )
    np.testing.assert_allclose(-laplacian, poly.f(points), rtol=1e-5)


def test_expected_rates():
    square, lshape = make_test_problem("square"), make_test_problem("lshape")
    assert square.expected_global_rate(3) == 0.5
    assert square.expected_local_rate(3) == 3.0
    assert lshape.expected_local_rate(1) == 1.0
    assert lshape.expected_local_rate(2) == pytest.approx(4 / 3)


def test_unknown_problem():
    with pytest.raises(ConfigError):
        make_test_problem("circle")


def test_estimate_rate_on_exact_powers():
    h = [0.5, 0.25, 0.125, 0.0625]
    assert estimate_rate(h, [x**2 for x in h]) == pytest.approx(2.0)
    assert estimate_rate(h, [3.0 * x**0.5 for x in h]) == pytest.approx(0.5)
    # Only the finest rows enter the window.
    assert estimate_rate(h, [1.0, 0.25**1.5, 0.125**1.5, 0.0625**1.5], window=3) == pytest.approx(1.5)


def test_estimate_rate_with_noise():
    rng = np.random.default_rng(7)
    h = 0.5 ** np.arange(1, 7)
    errors = h**1.5 * np.exp(rng.uniform(-0.05, 0.05, len(h)))
    assert estimate_rate(h, errors) == pytest.approx(1.5, abs=0.1)


@pytest.mark.parametrize(
    ("h", "errors"),
    [([0.5, 0.25], [1.0, 0.0]), ([0.5], [1.0]), ([0.5, 0.25], [1.0]), ([0.5, -0.25], [1.0, 0.5])],
)
def test_estimate_rate_rejects_bad_data(h, errors):
    with pytest.raises(RateError):
        estimate_rate(h, errors)


@pytest.mark.parametrize(
    "overrides",
    [
        {"problem": "circle"},
        {"family": "quads"},
        {"k": 0},
        {"k": 5},
        {"k": 3, "m": 0},
        {"levels": 2},
        {"first_level": 0},
        {"solver": "lu"},
        {"tol": 0.0},
        {"workers": 0},
        {"quad_offset": -1},
    ],
)
def test_study_config_validation(overrides):
    with pytest.raises(ConfigError):
        StudyConfig(**overrides).validate()


def test_study_config_defaults():
    config = StudyConfig(problem="lshape", k=2)
    config.validate()
    assert config.orders.m == 2
    assert list(config.level_range) == [2, 3, 4, 5]
    assert config.stem == "lshape_hex_k2_m2"


def test_small_deterministic_study(tmp_path):
    config = StudyConfig(problem="square", k=1, levels=3, first_level=3, deterministic=True, out_dir=tmp_path)
    table = run_study(config)
    csv = tmp_path / "square_hex_k1_m1.csv"
    lines = csv.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 5
    assert [line.split(",")[0] for line in lines[1:4]] == ["3", "4", "5"]
    assert all(line.endswith(",0.000000") for line in lines[1:4])
    assert lines[4].startswith("# slopes global=")
    assert (tmp_path / "square_hex_k1_m1.svg").exists()

    h = table.column("h")
    assert np.all(np.diff(h) < 0)
    assert set(table.slopes) == {"global", "inner", "outer"}
    assert all(row.e1_inner <= row.e1_outer <= row.e1_global for row in table.rows)

    first = csv.read_bytes()
    run_study(config)
    assert csv.read_bytes() == first


def study(problem: str, k: int, family: str = "hex") -> ConvergenceTable:
    # Four levels each; the finest mesh stays near 10^4 cells.
    first = 3 if k <= 2 else 2
    return run_study(
        StudyConfig(problem=problem, family=family, k=k, levels=4, first_level=first, deterministic=True)
    )


def test_error_quadrature_degree_is_converged():
    problem = make_test_problem("square")
    mesh = family_mesh("hex", Domain.UNIT_SQUARE, 3)
    solution = solve_problem(mesh, OrderPair(2, 2), problem.f, problem.g)
    reports = [
        compute_errors(
            mesh,
            solution.orders,
            solution.u,
            problem.exact,
            problem.subdomain,
            cell_dofs=solution.dofmap.cell_dofs,
            elements=solution.elements,
            quad_offset=offset,
            singular_point=problem.singular_point,
        )
        for offset in (0, 2)
    ]
    for name in ("e1_global", "e1_inner", "e1_outer"):
        assert getattr(reports[1], name) == pytest.approx(getattr(reports[0], name), rel=5e-3)


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_square_study_rates(k):
    table = study("square", k)
    # The corner solution lies in H^(1 + 2/3 - eps), so the global slope sits below the local one.
    assert 0.4 <= table.slopes["global"] <= 0.75
    if k <= 3:
        assert table.slopes["inner"] == pytest.approx(k, abs=0.2)
    else:
        assert table.slopes["inner"] >= 3.5
    if k >= 2:
        assert table.slopes["inner"] - table.slopes["global"] >= 1.0


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2, 3])
def test_lshape_study_rates(k):
    table = study("lshape", k)
    assert table.slopes["global"] == pytest.approx(0.5, abs=0.1)
    # Pollution from the re-entrant corner caps the interior rate at 4/3.
    expected = 1.0 if k == 1 else 4.0 / 3.0
    assert table.slopes["inner"] == pytest.approx(expected, abs=0.15)


@pytest.mark.slow
@pytest.mark.parametrize(
    ("problem", "k", "expected"), [("square", 1, 1.0), ("square", 2, 2.0), ("lshape", 2, 4.0 / 3.0)]
)
def test_voronoi_study_rates(problem, k, expected):
    table = study(problem, k, family="voronoi")
    assert table.slopes["global"] <= 0.75
    tolerance = 0.2 if problem == "square" else 0.15
    assert table.slopes["inner"] == pytest.approx(expected, abs=tolerance)


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2, 3])
def test_smooth_study_rates(k):
    table = study("smooth", k)
    assert table.slopes["global"] == pytest.approx(k, abs=0.2)
