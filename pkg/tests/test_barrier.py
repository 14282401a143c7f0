import math

import numpy as np
import pytest

from bodies import hexagon, interior_points, random_h
from oracles import conj1, var1
from entropic_barrier.barrier import (barrier_eval, conjugate, entropy_identity_check, sc_parameter_at, sc_sweep,
                                      third_order_check)
from entropic_barrier.geometry import Box, Simplex, translate
from entropic_barrier.loglaplace import EvalConfig, eval_exact


def test_conjugate_interval_against_bisection():
    for x in (0.7, 0.5, 0.05, 0.999):
        th, val = conj1(x)
        bp = conjugate(Box.unit(1), [x])
        assert bp.theta[0] == pytest.approx(th, rel=1e-9, abs=1e-9)
        assert bp.value == pytest.approx(val, rel=1e-9, abs=1e-10)


def test_barrier_examples():
    value, grad, hess = barrier_eval(Box.unit(2), [0.5, 0.5])
    assert value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(grad, 0.0, atol=1e-10)
    np.testing.assert_allclose(hess, 12 * np.eye(2), rtol=1e-10)
    value, _, _ = barrier_eval(Simplex.standard(2), [1 / 3, 1 / 3])
    assert value == pytest.approx(math.log(2), abs=1e-10)
    assert conjugate(Box.unit(1), [0.7]).theta[0] == pytest.approx(2.6721, abs=1e-3)


@pytest.mark.parametrize("body", [Box.unit(3), Simplex.standard(3), hexagon(), random_h(3, 10, 8)])
def test_round_trip_and_hessian_inverse(body):
    rng = np.random.default_rng(1)
    for x in interior_points(body, 5, rng):
        bp = conjugate(body, x)
        e = eval_exact(body, bp.theta)
        assert np.linalg.norm(e.mean - x) <= 1e-8
        np.testing.assert_allclose(bp.hessian @ e.covariance, np.eye(body.dim), atol=1e-8)


def test_gradient_matches_finite_differences():
    body = hexagon()
    x = np.array([0.3, -0.2])
    bp = conjugate(body, x, tol=1e-13)
    h = 1e-6
    g = [(conjugate(body, x + d, tol=1e-13).value - conjugate(body, x - d, tol=1e-13).value) / (2 * h)
         for d in np.eye(2) * h]
    np.testing.assert_allclose(bp.gradient, g, atol=1e-5)


def test_midpoint_convexity():
    body = random_h(2, 7, 2)
    rng = np.random.default_rng(5)
    P = interior_points(body, 20, rng)
    for a, b in zip(P[::2], P[1::2]):
        fm = conjugate(body, (a + b) / 2).value
        assert fm <= 0.5 * (conjugate(body, a).value + conjugate(body, b).value) + 1e-10


def test_blows_up_toward_boundary():
    vals = [conjugate(Box.unit(2), [1 - 10.0**-k, 0.5]).value for k in range(1, 7)]
    assert np.all(np.diff(vals) > 0)


def test_rejects_points_outside_interior():
    with pytest.raises(ValueError):
        conjugate(Box.unit(2), [1.0, 0.5])
    with pytest.raises(ValueError):
        conjugate(Box.unit(2), [1.5, 0.5])


def test_sc_parameter_examples():
    assert sc_parameter_at(Box.unit(2), [0.0, 0.0]) == 0.0
    assert sc_parameter_at(Box.unit(1), [1.0]) == pytest.approx(var1(1.0), rel=1e-10)
    assert sc_parameter_at(Box.unit(1), [1.0]) == pytest.approx(0.0793264, abs=1e-7)
    nu = sc_parameter_at(Box.unit(2), [50.0, 50.0])
    assert nu == pytest.approx(2 * 2500 * var1(50.0), rel=1e-10)
    assert nu == pytest.approx(2.0, abs=1e-6)


def test_sc_parameter_translation_invariant():
    body = random_h(3, 9, 4)
    th = np.array([3.0, -8.0, 1.5])
    a = sc_parameter_at(body, th)
    b = sc_parameter_at(translate(body, [5.0, -2.0, 0.3]), th)
    assert a == pytest.approx(b, rel=1e-9)


def test_sc_sweep_example():
    rep = sc_sweep(Box.unit(2), directions=8, max_norm=100, seed=0)
    assert rep.passed
    assert rep.nu_max <= 2 * (1 + 1e-6)
    assert rep.nu_max >= 1.9  # vertex directions reach the corner regime
    assert not rep.errors


def test_sc_sweep_monte_carlo_mode():
    cfg = EvalConfig(mode="mc", mc_samples=4000, seed=0)
    rep = sc_sweep(Simplex.standard(2), directions=1, max_norm=20, levels=2, config=cfg)
    assert rep.mode == "mc" and rep.passed


def test_third_order_examples():
    lhs, rhs, ok = third_order_check(Box.unit(2), [0.5, 0.5], [1.0, 0.0])
    assert ok and abs(lhs) < 1e-3  # symmetric point: third derivative vanishes
    lhs, rhs, ok = third_order_check(Box.unit(1), [0.99], [1.0])
    assert ok and lhs > 0
    lhs, rhs, ok = third_order_check(hexagon(), [0.2, 0.1], [0.3, -1.0])
    assert ok


def test_entropy_identity_examples():
    assert entropy_identity_check(Box.unit(1), [0.7]) <= 1e-6
    assert entropy_identity_check(Simplex.standard(2), [0.2, 0.3]) <= 1e-6
    assert entropy_identity_check(Simplex.standard(2), [1 / 3, 1 / 3]) <= 1e-6
