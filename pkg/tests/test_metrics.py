import numpy as np
import pytest
from scipy.optimize import brentq

from divide_blo.bench.metrics import bilevel_optimum, compute_metrics, gap_series, upper_lower_bound
from divide_blo.covering import grid_covering
from divide_blo.solver import IterationTrace

Y_STAR = brentq(lambda y: 10 * np.cos(10 * y) + 4 * y, -0.2, -0.1)
# with y* fixed, min over x of 3x^2 + 7x y* + x: x* = -(7 y* + 1) / 6
X_STAR = -(7 * Y_STAR + 1) / 6
F_STAR = 3 * X_STAR**2 + 7 * X_STAR * Y_STAR + 5 * Y_STAR**2 + X_STAR - Y_STAR + 5


def fake_trace(xs, ys):
    xs, ys = np.atleast_2d(xs).astype(float), np.atleast_2d(ys).astype(float)
    z = np.zeros(len(xs))
    return IterationTrace("x", np.arange(len(xs)), z, z, z, xs, ys, z, "converged", 1.0)


@pytest.fixture(scope="module")
def f_star(synthetic):
    return bilevel_optimum(synthetic, 1001)


def test_analytic_reference():
    assert Y_STAR == pytest.approx(-0.151034568872, abs=1e-11)
    assert F_STAR == pytest.approx(5.264818720133814, abs=1e-12)


def test_bilevel_optimum_matches_analytic(f_star, synthetic):
    value, x, y = f_star
    assert value == pytest.approx(F_STAR, abs=1e-8)
    assert x[0] == pytest.approx(X_STAR, abs=1e-4)
    assert y[0] == pytest.approx(Y_STAR, abs=1e-6)
    coarse = bilevel_optimum(synthetic, 401)[0]
    assert abs(coarse - value) <= 1e-5


def test_metrics_at_solution(synthetic, f_star):
    rep = compute_metrics(synthetic, fake_trace([[X_STAR]], [[Y_STAR]]), f_star=f_star[0])
    assert abs(rep.violation) <= 1e-10
    assert abs(rep.total_gap) <= 1e-7
    assert rep.v_of_x == pytest.approx(np.sin(10 * Y_STAR) + 2 * Y_STAR**2, abs=1e-12)


def test_metrics_local_minimum(synthetic, f_star):
    y_loc = brentq(lambda y: 10 * np.cos(10 * y) + 4 * y, 0.4, 0.55)
    rep = compute_metrics(synthetic, fake_trace([[0.0]], [[y_loc]]), f_star=f_star[0])
    expected = np.sin(10 * y_loc) + 2 * y_loc**2 - (np.sin(10 * Y_STAR) + 2 * Y_STAR**2)
    assert rep.violation == pytest.approx(expected, abs=1e-10)
    assert rep.violation > 0.1


def test_violation_nonnegative(synthetic, f_star):
    rng = np.random.default_rng(0)
    xs = rng.uniform(-10, 10, (30, 1))
    ys = rng.uniform(-5, 5, (30, 1))
    for x, y in zip(xs, ys):
        assert compute_metrics(synthetic, fake_trace([x], [y]), f_star=f_star[0]).violation >= -1e-6


def test_gap_series_holds_terminal_value(synthetic, f_star):
    tr = fake_trace([[1.0], [X_STAR]], [[0.3], [Y_STAR]])
    gaps = gap_series(synthetic, tr, [0, 1, 5, 100], f_star[0])
    assert gaps[0] > 0.1
    assert np.allclose(gaps[1:], gaps[1], atol=0) and abs(gaps[1]) <= 1e-7


def test_lower_bound_unconstrained_minimum(synthetic, grid201):
    # minimizer of the convex quadratic f: (-17/11, 13/11), inside the box
    z = np.linalg.solve([[6, 7], [7, 10]], [-1, 1])
    expected = 5 + 0.5 * np.dot([1, -1], z)
    assert upper_lower_bound(synthetic, grid201) == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(3.6364, abs=1e-4)


def test_lower_bound_restricted_hull(synthetic):
    # covering on [2, 5] excludes y = 13/11, so the hull edge y = 2 binds
    from divide_blo.covering import Covering
    c = Covering(np.linspace(2, 5, 10)[:, None], 0.25, "grid")
    x = -(7 * 2 + 1) / 6
    expected = 3 * x**2 + 7 * x * 2 + 5 * 4 + x - 2 + 5
    assert upper_lower_bound(synthetic, c) == pytest.approx(expected, abs=1e-9)


def test_requires_terminal_state(synthetic):
    empty = IterationTrace("x", np.arange(0), np.zeros(0), np.zeros(0), np.zeros(0),
                           np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0), "max_iters", 1.0)
    with pytest.raises(ValueError):
        compute_metrics(synthetic, empty, f_star=0.0)
