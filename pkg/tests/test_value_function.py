import numpy as np
import pytest

from divide_blo.covering import Covering, grid_covering
from divide_blo.problem import BoxSet, ProblemSpec, SmoothnessConstants, quadratic_trig
from divide_blo.value_function import (
    approximation_error_bound,
    eval_value_function,
    oracle_true_value,
    oracle_true_values,
    radius_error_bound,
)

ONES = SmoothnessConstants(1, 1, 1, 1, 1)


def linear_lower_problem(y_hi):
    """g(x, y) = y, f = 0, y in [0, y_hi]."""
    zero = quadratic_trig(1, Q=np.zeros((2, 2)))
    g = quadratic_trig(1, Q=np.zeros((2, 2)), c=[0.0, 1.0])
    return ProblemSpec(zero, g, BoxSet([-1], [1]), BoxSet([0], [y_hi]), constants=ONES)


def test_single_point(synthetic):
    c = Covering([[0.3]], 0.0, "grid")
    ev = eval_value_function(synthetic, c, 0.5, [1.0])
    assert np.array_equal(ev.p_star, [1.0])
    assert ev.v_tilde == pytest.approx(np.sin(3.0) + 2 * 0.09 + 0.25, abs=1e-14)


def test_equal_values_give_uniform_weights():
    zero = quadratic_trig(1, Q=np.zeros((2, 2)), const=2.0)
    p = ProblemSpec(zero, zero, BoxSet([-1], [1]), BoxSet([0], [1]), constants=ONES)
    c = grid_covering(p.y_domain, 4)
    ev = eval_value_function(p, c, 0.2, [0.0])
    assert np.allclose(ev.p_star, 0.25, atol=1e-15)
    assert ev.v_tilde == pytest.approx(2.0 + 0.2 / 8, abs=1e-14)
    assert np.allclose(ev.grad, 0.0)


def test_two_points_gap_equals_lambda():
    lam = 0.01
    p = linear_lower_problem(lam)
    c = Covering([[0.0], [lam]], lam / 2, "grid")
    ev = eval_value_function(p, c, lam, [0.0])
    assert np.allclose(ev.p_star, [1.0, 0.0], atol=1e-15)
    assert ev.v_tilde == pytest.approx(lam / 2, abs=1e-15)
    assert ev.v_hat == 0.0


def test_two_points_small_gap_split():
    # gap below lambda: p* = (1/2 + d/(2 lam), 1/2 - d/(2 lam))
    lam, d = 1.0, 0.4
    p = linear_lower_problem(d)
    c = Covering([[0.0], [d]], d / 2, "grid")
    ev = eval_value_function(p, c, lam, [0.0])
    assert np.allclose(ev.p_star, [0.7, 0.3], atol=1e-14)
    assert ev.v_tilde == pytest.approx(0.3 * d + 0.5 * lam * (0.49 + 0.09), abs=1e-14)


def test_argument_checks(synthetic, grid201):
    with pytest.raises(ValueError):
        eval_value_function(synthetic, grid201, 0.0, [0.0])
    with pytest.raises(ValueError):
        eval_value_function(synthetic, grid201, 0.1, [11.0])
    with pytest.raises(ValueError):
        eval_value_function(synthetic, grid201, 0.1, [0.0, 0.0])


def test_gradient_matches_central_differences(coupled):
    c = grid_covering(coupled.y_domain, 41)
    rng = np.random.default_rng(2)
    h = 1e-6
    for lam in (0.05, 0.5):
        for _ in range(30):
            x = rng.uniform(-1.8, 1.8, 2)
            ev = eval_value_function(coupled, c, lam, x)
            fd = np.array([
                (eval_value_function(coupled, c, lam, x + h * e).v_tilde
                 - eval_value_function(coupled, c, lam, x - h * e).v_tilde) / (2 * h)
                for e in np.eye(2)
            ])
            assert np.linalg.norm(ev.grad - fd) <= 1e-5 * max(np.linalg.norm(fd), 1.0)


def test_sandwich_against_oracle(coupled):
    c = grid_covering(coupled.y_domain, 81)
    xs = np.random.default_rng(4).uniform(-2, 2, (40, 2))
    truth, _ = oracle_true_values(coupled, xs)
    for lam in (0.01, 0.3):
        for x, v in zip(xs, truth):
            ev = eval_value_function(coupled, c, lam, x)
            assert v - 1e-12 <= ev.v_hat <= ev.v_tilde + 1e-12
            assert ev.v_tilde <= ev.v_hat + lam / 2 + 1e-12
            assert ev.v_tilde - v <= radius_error_bound(coupled.constants.L_g, c.radius, lam)
            assert ev.v_tilde - v <= approximation_error_bound(coupled.constants, 1, c.k, lam)


def test_synthetic_sandwich(synthetic, grid201):
    truth = oracle_true_value(synthetic, [0.0])
    for lam in (1e-3, 1e-2, 1.0):
        ev = eval_value_function(synthetic, grid201, lam, [3.0])
        assert truth <= ev.v_tilde <= truth + synthetic.constants.L_g * grid201.radius + lam / 2


def test_gradient_lipschitz_bound(coupled):
    c = grid_covering(coupled.y_domain, 21)
    k, lam = c.k, 0.1
    L = coupled.constants.L_g ** 2 * k / lam + coupled.constants.Lbar_g
    rng = np.random.default_rng(9)
    for _ in range(200):
        x1 = rng.uniform(-2, 2, 2)
        x2 = np.clip(x1 + rng.normal(scale=rng.choice([1e-3, 0.1, 1.0]), size=2), -2, 2)
        g1 = eval_value_function(coupled, c, lam, x1).grad
        g2 = eval_value_function(coupled, c, lam, x2).grad
        assert np.linalg.norm(g1 - g2) <= L * np.linalg.norm(x1 - x2) + 1e-12


def test_monotone_in_lambda(coupled):
    c = grid_covering(coupled.y_domain, 31)
    rng = np.random.default_rng(1)
    lams = [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0]
    for _ in range(20):
        x = rng.uniform(-2, 2, 2)
        vals = [eval_value_function(coupled, c, lam, x).v_tilde for lam in lams]
        assert all(a <= b + 1e-14 for a, b in zip(vals, vals[1:]))


def test_large_lambda_tends_to_mean(synthetic, grid201):
    ev = eval_value_function(synthetic, grid201, 1e8, [0.0])
    assert np.allclose(ev.p_star, 1 / 201, atol=1e-6)
    assert len(ev.support) == 201


def test_error_bound_examples():
    c = SmoothnessConstants(L_f=1, L_g=30, Lbar_f=1, Lbar_g=1, D=5)
    assert approximation_error_bound(c, 1, 201, 0.01) == pytest.approx(1.4975, abs=5e-5)
    # k = 1: bound is 2 L_g D sqrt(m) + lam/2
    assert approximation_error_bound(c, 2, 1, 0.2) == pytest.approx(2 * 30 * 5 * np.sqrt(2) + 0.1)
    assert radius_error_bound(30, 0.025, 0.01) == pytest.approx(0.755)
    with pytest.raises(ValueError):
        approximation_error_bound(c, 1, 0, 0.1)


def test_oracle_resolution_agreement(synthetic, coupled):
    xs = np.array([[-2.0, 1.5], [0.3, -0.7], [1.9, 0.0]])
    a, _ = oracle_true_values(coupled, xs, 1001)
    b, _ = oracle_true_values(coupled, xs, 4001)
    assert np.max(np.abs(a - b)) <= 1e-6
    assert abs(oracle_true_value(synthetic, [0.0], 1001) - oracle_true_value(synthetic, [0.0], 4001)) <= 1e-6


def test_oracle_synthetic_minimizer(synthetic):
    v, y = oracle_true_values(synthetic, [[0.0]])
    # stationary point of sin(10y) + 2y^2 near -0.151
    assert y[0, 0] == pytest.approx(-0.151034568872, abs=1e-8)
    assert v[0] == pytest.approx(np.sin(10 * y[0, 0]) + 2 * y[0, 0] ** 2, abs=1e-14)
    assert v[0] < -0.95


def test_oracle_known_minima():
    zero = quadratic_trig(1, Q=np.zeros((2, 2)))
    p = ProblemSpec(zero, zero, BoxSet([-1], [1]), BoxSet([-2], [2]), constants=ONES)
    assert oracle_true_value(p, [0.5]) == 0.0
    # (y - 1)^2 = y^2 - 2y + 1
    sq = quadratic_trig(1, Q=[[0, 0], [0, 2]], c=[0, -2], const=1.0)
    p2 = ProblemSpec(zero, sq, BoxSet([-1], [1]), BoxSet([-2], [2]), constants=SmoothnessConstants(1, 1, 1, 2, 2))
    assert oracle_true_value(p2, [0.0]) == pytest.approx(0.0, abs=1e-12)


def test_oracle_two_dims(plane2d):
    # minimum over y1 of sin(2 y1) + y1^2 is attained near y1 = -0.5149
    v = oracle_true_value(plane2d, [0.4], grid_per_dim=201)
    y1 = np.linspace(-2, 2, 400001)
    assert v == pytest.approx(np.min(np.sin(2 * y1) + y1 ** 2), abs=1e-9)


def test_oracle_limits():
    zero = quadratic_trig(1, Q=np.zeros((5, 5)))
    p = ProblemSpec(zero, zero, BoxSet([0], [1]), BoxSet([0] * 4, [1] * 4), constants=ONES)
    with pytest.raises(ValueError):
        oracle_true_value(p, [0.0])
    with pytest.raises(ValueError):
        oracle_true_value(linear_lower_problem(1.0), [0.0], grid_per_dim=50)
