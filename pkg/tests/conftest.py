import numpy as np
import pytest

from divide_blo.covering import grid_covering
from divide_blo.problem import BoxSet, ProblemSpec, TrigTerm, derive_constants_numerically, make_synthetic_1d, quadratic_trig

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def synthetic():
    return make_synthetic_1d()


@pytest.fixture(scope="session")
def grid201(synthetic):
    return grid_covering(synthetic.y_domain, 201)


@pytest.fixture(scope="session")
def coupled():
    """n=2, m=1 instance whose lower level depends on x:
    f = x0^2 + x1^2 + y^2 + x0 y - y,  g = sin(x0 + 3y) + 0.3 x1 y + 0.5 y^2."""
    upper = quadratic_trig(2, Q=[[2, 0, 1], [0, 2, 0], [1, 0, 2]], c=[0, 0, -1])
    lower = quadratic_trig(2, Q=[[0, 0, 0], [0, 0, 0.3], [0, 0.3, 1]], trig=[TrigTerm(1.0, (1.0, 0.0, 3.0))])
    p = ProblemSpec(upper, lower, BoxSet([-2, -2], [2, 2]), BoxSet([-1], [1]), name="coupled")
    return p.with_constants(derive_constants_numerically(p, 61))


@pytest.fixture(scope="session")
def plane2d():
    """n=1, m=2 instance for two-dimensional coverings and oracles:
    g = (y0 - x)^2 + sin(2 y1) + y1^2,  f = x^2 + y0^2 + y1^2."""
    upper = quadratic_trig(1, Q=np.diag([2.0, 2.0, 2.0]))
    lower = quadratic_trig(1, Q=[[2, -2, 0], [-2, 2, 0], [0, 0, 2]], trig=[TrigTerm(1.0, (0.0, 0.0, 2.0))])
    p = ProblemSpec(upper, lower, BoxSet([-1], [1]), BoxSet([-2, -2], [2, 2]), name="plane2d")
    return p.with_constants(derive_constants_numerically(p, 41))


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, passed, detail)."""
    def record(number, passed, detail):
        ACCEPTANCE_LINES.append(f"[criterion {number}] {'PASS' if passed else 'FAIL'}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
