import numpy as np
import pytest

from hfproj import Configuration, build_grid
from hfproj.fixedpoint import solve, solver_grid
from hfproj.hartree import hartree_grid

# lines printed at the end of the run, one per acceptance criterion
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def default_grid():
    return build_grid()


@pytest.fixture(scope="session")
def grid():
    return solver_grid()


@pytest.fixture(scope="session")
def small_grid():
    return build_grid("log-linear", 40.0, 300)


@pytest.fixture(scope="session")
def h_grid():
    return hartree_grid()


@pytest.fixture(scope="session")
def helium():
    return Configuration(z=35, q=2, shells=[1])


@pytest.fixture(scope="session")
def helium_solution(helium, grid):
    state, report = solve(helium, grid=grid, tol=1e-10, max_iter=30)
    assert report.converged
    return state, report


@pytest.fixture(scope="session")
def boron():
    return Configuration(z=150, q=1, mode="restricted", shells=[(1, 0), (2, 0), (2, 1)])


@pytest.fixture(scope="session")
def boron_solution(boron, grid):
    state, report = solve(boron, grid=grid, tol=1e-10, max_iter=50)
    assert report.converged
    return state, report


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def hartree_z35(h_grid):
    from hfproj.hartree import restricted_minimize, unrestricted_minimize

    return restricted_minimize(2, 35.0, grid=h_grid), unrestricted_minimize(2, 35.0, grid=h_grid)


@pytest.fixture(scope="session")
def hartree_z102(h_grid):
    from hfproj.hartree import restricted_minimize, unrestricted_minimize

    return restricted_minimize(2, 1.02, grid=h_grid), unrestricted_minimize(2, 1.02, grid=h_grid)
