import sys
import numpy as np
import pytest

from quasiyamabe.exprjet import as_expr
from quasiyamabe.geometry import Chart, MetricPatch


def make_metric(coords, matrix, constraints=()) -> MetricPatch:
    chart = Chart(tuple(coords), tuple(as_expr(c) for c in constraints))
    return MetricPatch.from_matrix(chart, [[as_expr(str(v)) for v in row] for row in matrix])


def diag(n, entry):
    return [[entry if i == j else 0 for j in range(n)] for i in range(n)]


def euclidean(n=3, names=None):
    return make_metric(names or [f"x{i + 1}" for i in range(n)], diag(n, 1))


def hyperbolic():
    return make_metric(["x", "y", "z"], diag(3, "z^(-2)"), ["z"])


def sphere(m=3, names=None):
    names = names or [f"u{i + 1}" for i in range(m)]
    r2 = "+".join(f"{c}^2" for c in names)
    return make_metric(names, diag(m, f"4/(1+{r2})^2"))


def line_sphere_matrix():
    s = "4/(1+u^2+v^2)^2"
    return [[1, 0, 0], [0, f"exp(2*t)*{s}", 0], [0, 0, f"exp(2*t)*{s}"]]


@pytest.fixture
def hyp3():
    return hyperbolic()


@pytest.fixture
def sph3():
    return sphere(3)


@pytest.fixture
def euc3():
    return euclidean(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def hyp_points(rng, count=10):
    return np.column_stack([rng.uniform(-2, 2, count), rng.uniform(-2, 2, count), rng.uniform(0.2, 3, count)])


def sphere_points(rng, count=10, m=3):
    return rng.uniform(-1.5, 1.5, size=(count, m))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
