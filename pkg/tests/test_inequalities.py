import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from oracles import var1
from entropic_barrier.geometry import Box, Simplex
from entropic_barrier.inequalities import (QUADRATURE, Custom1D, Gaussian, Linear, MonteCarlo, PotentialItself,
                                           Quadratic, Sine, TiltedUniform, amplify_nu, bl_catalog,
                                           classical_bl_check, cosh_potential, dimensional_bl_check, gaussian_1d,
                                           hormander_catalog, hormander_identity_check, quartic, tensorization_check,
                                           varentropy_catalog, varentropy_check, varentropy_sharp_bound)


def test_varentropy_examples():
    r = varentropy_check(Gaussian(1), QUADRATURE)
    assert r.lhs == pytest.approx(0.5, abs=1e-12) and r.rhs == 1 and r.passed
    r = varentropy_check(TiltedUniform(Box.unit(1), [1.0]), QUADRATURE)
    assert r.lhs == pytest.approx(var1(1.0), abs=1e-9) and r.passed
    r = varentropy_check(Gaussian(3), MonteCarlo(100_000, seed=0))
    assert abs(r.lhs - 1.5) <= 3 * r.std_err and r.passed


def test_varentropy_tilted_box_near_equality():
    r = varentropy_check(TiltedUniform(Box.unit(2), [50.0, 50.0]), QUADRATURE)
    assert r.lhs == pytest.approx(2.0, abs=1e-6) and r.passed


def test_varentropy_quartic_against_direct_quadrature():
    mu = quartic()
    V = lambda x: x**4 / 12 + x**2 / 2  # noqa: E731
    Z = integrate.quad(lambda x: math.exp(-V(x)), -3, 3)[0]
    m = integrate.quad(lambda x: V(x) * math.exp(-V(x)), -3, 3)[0] / Z
    v = integrate.quad(lambda x: (V(x) - m) ** 2 * math.exp(-V(x)), -3, 3)[0] / Z
    assert varentropy_check(mu).lhs == pytest.approx(v, rel=1e-9)


def test_dimensional_bl_examples():
    r = dimensional_bl_check(Gaussian(1), Linear(1.0))
    assert abs(r.slack) <= 1e-8
    r = dimensional_bl_check(Gaussian(1), PotentialItself())
    assert abs(r.slack) <= 1e-8
    r = dimensional_bl_check(Gaussian(1), Sine(1.0))
    assert r.passed and r.slack > 0.1


def test_gaussian_sine_closed_form():
    # var sin X = (1 - e^{-2}) / 2 and E cos^2 X = (1 + e^{-2}) / 2; cov(sin X, V) = 0
    r = classical_bl_check(Gaussian(1), Sine(1.0))
    assert r.lhs == pytest.approx((1 - math.exp(-2)) / 2, abs=1e-12)
    assert r.rhs == pytest.approx((1 + math.exp(-2)) / 2, abs=1e-12)


def test_dimensional_bl_monte_carlo():
    r = dimensional_bl_check(Gaussian(2), Quadratic(np.array([[1.0, 0.2], [0.2, 0.3]]), 0.0),
                             MonteCarlo(100_000, seed=3))
    assert r.passed and r.std_err > 0


def test_dimensional_bl_rejects_tilted_uniform():
    with pytest.raises(ValueError):
        dimensional_bl_check(TiltedUniform(Box.unit(2), [1.0, 1.0]), Linear(1.0))


def test_dimensional_is_sharper_than_classical():
    for mu, g in bl_catalog():
        c = classical_bl_check(mu, g)
        d = dimensional_bl_check(mu, g)
        assert d.slack <= c.slack + 1e-12
        assert c.terms["rhs_dimensional"] == pytest.approx(d.rhs, abs=1e-12)


def test_varentropy_sharp_bound():
    # Gaussian: Q = E|x|^2 = n, bound n*n/(n+n) = n/2 = var V
    v, bound = varentropy_sharp_bound(Gaussian(2))
    assert v == pytest.approx(1.0, abs=1e-10) and bound == pytest.approx(1.0, abs=1e-10)
    v, bound = varentropy_sharp_bound(quartic())
    assert v <= bound + 1e-10 and bound < 1


def test_hormander_gaussian_hand_values():
    r = hormander_identity_check(gaussian_1d(), Linear(1.0))
    assert r.lhs == pytest.approx(1.0, abs=1e-9) and r.rhs == pytest.approx(1.0, abs=1e-9)
    r = hormander_identity_check(gaussian_1d(), Quadratic(1.0, 0.0))
    assert r.lhs == pytest.approx(8.0, abs=1e-9) and r.rhs == pytest.approx(8.0, abs=1e-9)


def test_hormander_constant_u_is_trivial():
    r = hormander_identity_check(cosh_potential(), Linear(0.0))
    assert r.lhs == 0 and r.rhs == 0 and r.residual == 0 and r.passed


def test_hormander_rejects_large_boundary_flux():
    with pytest.raises(ValueError, match="boundary"):
        hormander_identity_check(gaussian_1d(-1.0, 1.0), Linear(1.0))


def test_custom_potential_requires_convexity():
    with pytest.raises(ValueError):
        Custom1D(lambda x: -x**2, lambda x: -2 * x, lambda x: -2 * np.ones_like(x), -1.0, 1.0)


def test_catalog_sizes():
    assert len(bl_catalog()) == 12
    assert len(hormander_catalog()) == 12
    assert all(varentropy_check(mu, est).passed for mu, est in varentropy_catalog())


def test_tensorization_examples():
    assert tensorization_check(Box.unit(1), Box.unit(1), [0.3], [0.8]) <= 1e-8
    assert tensorization_check(Simplex.standard(2), Box([0.0], [2.0]), [0.2, 0.5], [1.7]) <= 1e-8


def test_amplify_examples():
    assert amplify_nu(lambda m: m + math.sqrt(m), 4, 10**4) == pytest.approx(4.02, abs=1e-12)
    assert amplify_nu({2: 2.0, 4: 4.0}, 2, 2) == 2.0
    with pytest.raises(ValueError):
        amplify_nu(lambda m: m, 1, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 500))
def test_amplify_is_monotone_and_exact(n, k_max):
    nu = lambda m: m + math.sqrt(m)  # noqa: E731
    a = amplify_nu(nu, n, k_max)
    assert a == pytest.approx(n + math.sqrt(n / k_max), rel=1e-14)
    assert amplify_nu(nu, n, k_max + 1) <= a
