"""Numerical checks of the variance inequalities behind the optimal barrier parameter.

For a log-concave measure mu proportional to exp(-V) in dimension n:

* varentropy bound          var V <= n
* classical Brascamp-Lieb    var g <= E <grad g, (hess V)^{-1} grad g>
* dimensional Brascamp-Lieb  var g <= E <grad g, (hess V)^{-1} grad g> - cov(g, V)^2 / (n - var V)

plus the one-dimensional Hormander L2 identity

    E[(L u)^2] = E[V'' u'^2] + E[u''^2],   L u = -u'' + V' u',

and the additivity of the barrier over Cartesian products together with the
parameter amplification it implies.

Expectations are computed by deterministic quadrature (Gauss-Hermite for
Gaussians, adaptive quadrature for one-dimensional potentials, cell
quadrature or the exact evaluator for tilted uniform measures) or by Monte
Carlo with delta-method standard errors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate

from .barrier import conjugate, tilted_quadrature
from .geometry import Box, ConvexBody, Product, Simplex
from .loglaplace import eval_exact
from .sampler import SamplerConfig, batch_means_stderr, sample

QUAD_TOL = 1e-8
BOUNDARY_TOL = 1e-10
IDENTITY_TOL = 1e-6
_GH_NODES = 80


# ---------------------------------------------------------------------------
# measures

@dataclass(frozen=True, eq=False)
class TiltedUniform:
    """p_theta on a polytope: V(x) = -<theta, x> up to a constant (linear, not strictly convex)."""

    body: ConvexBody
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float).reshape(self.body.dim))

    @property
    def dim(self) -> int:
        return self.body.dim

    def V(self, X):
        return -(X @ self.theta)

    def grad(self, X):
        return np.broadcast_to(-self.theta, X.shape)

    def hess(self, X):
        return np.zeros((X.shape[0], self.dim, self.dim))


@dataclass(frozen=True)
class Gaussian:
    """Standard normal: V(x) = |x|^2 / 2 + (n/2) ln(2 pi)."""

    dim: int

    def V(self, X):
        return 0.5 * np.sum(X * X, axis=1) + 0.5 * self.dim * math.log(2 * math.pi)

    def grad(self, X):
        return X

    def hess(self, X):
        return np.broadcast_to(np.eye(self.dim), (X.shape[0], self.dim, self.dim))


@dataclass(frozen=True, eq=False)
class Custom1D:
    """mu proportional to exp(-V) on [a, b], with V, V', V'' given as vectorized callables."""

    V0: Callable
    dV: Callable
    d2V: Callable
    a: float
    b: float
    name: str = "custom"

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("Custom1D requires a < b")
        grid = np.linspace(self.a, self.b, 2001)
        if np.any(self.d2V(grid) <= 0):
            raise ValueError("Custom1D requires V'' > 0 on [a, b]")

    @property
    def dim(self) -> int:
        return 1

    def V(self, X):
        return self.V0(X[:, 0])

    def grad(self, X):
        return self.dV(X[:, 0])[:, None]

    def hess(self, X):
        return self.d2V(X[:, 0])[:, None, None]


def quartic(c4: float = 1 / 12, c2: float = 0.5, a: float = -3.0, b: float = 3.0) -> Custom1D:
    """V(x) = c4 x^4 + c2 x^2 on [a, b]."""
    return Custom1D(lambda x: c4 * x**4 + c2 * x**2,
                    lambda x: 4 * c4 * x**3 + 2 * c2 * x,
                    lambda x: 12 * c4 * x**2 + 2 * c2,
                    a, b, f"quartic({c4:g},{c2:g})[{a:g},{b:g}]")


def gaussian_1d(a: float = -12.0, b: float = 12.0) -> Custom1D:
    return Custom1D(lambda x: 0.5 * x**2, lambda x: x, lambda x: np.ones_like(x), a, b, f"x^2/2[{a:g},{b:g}]")


def cosh_potential(a: float = -9.0, b: float = 9.0) -> Custom1D:
    return Custom1D(np.cosh, np.sinh, np.cosh, a, b, f"cosh[{a:g},{b:g}]")


# ---------------------------------------------------------------------------
# test functions

@dataclass(frozen=True, eq=False)
class Linear:
    a: np.ndarray | float = 1.0

    def _a(self, n):
        return np.broadcast_to(np.asarray(self.a, dtype=float), (n,))

    def value(self, X, mu):
        return X @ self._a(X.shape[1])

    def grad(self, X, mu):
        return np.broadcast_to(self._a(X.shape[1]), X.shape)

    def hess(self, X, mu):
        return np.zeros((X.shape[0], X.shape[1], X.shape[1]))


@dataclass(frozen=True, eq=False)
class Quadratic:
    """g(x) = <x, Q x> + <b, x>."""

    Q: np.ndarray | float = 1.0
    b: np.ndarray | float = 0.0

    def _Qb(self, n):
        Q = np.asarray(self.Q, dtype=float)
        Q = Q * np.eye(n) if Q.ndim == 0 else Q
        return 0.5 * (Q + Q.T), np.broadcast_to(np.asarray(self.b, dtype=float), (n,))

    def value(self, X, mu):
        Q, b = self._Qb(X.shape[1])
        return np.einsum("ni,ij,nj->n", X, Q, X) + X @ b

    def grad(self, X, mu):
        Q, b = self._Qb(X.shape[1])
        return 2 * X @ Q + b

    def hess(self, X, mu):
        Q, _ = self._Qb(X.shape[1])
        return np.broadcast_to(2 * Q, (X.shape[0],) + Q.shape)


@dataclass(frozen=True)
class PotentialItself:
    """g = V."""

    def value(self, X, mu):
        return mu.V(X)

    def grad(self, X, mu):
        return mu.grad(X)

    def hess(self, X, mu):
        return mu.hess(X)


@dataclass(frozen=True)
class Sine:
    """g(x) = sin(freq * sum_i x_i)."""

    freq: float = 1.0

    def value(self, X, mu):
        return np.sin(self.freq * X.sum(axis=1))

    def grad(self, X, mu):
        c = self.freq * np.cos(self.freq * X.sum(axis=1))
        return np.repeat(c[:, None], X.shape[1], axis=1)

    def hess(self, X, mu):
        s = -self.freq**2 * np.sin(self.freq * X.sum(axis=1))
        n = X.shape[1]
        return s[:, None, None] * np.ones((n, n))


# ---------------------------------------------------------------------------
# estimators

@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 100_000
    seed: int = 0


QUADRATURE = "quadrature"


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    terms: dict
    slack: float
    std_err: float | None
    passed: bool
    tol: float


@dataclass
class IdentityReport:
    name: str
    lhs: float
    rhs: float
    residual: float
    boundary: float
    passed: bool
    terms: dict = field(default_factory=dict)


def _bl_integrand(mu, g, X):
    """<grad g, (hess V)^{-1} grad g> at each row of X."""
    G = g.grad(X, mu)
    H = mu.hess(X)
    if isinstance(mu, Gaussian):
        return np.sum(G * G, axis=1)
    if mu.dim == 1:
        h = H[:, 0, 0]
        if np.any(h <= 0):
            raise ValueError("hess V is singular at a quadrature node")
        return G[:, 0] ** 2 / h
    return np.einsum("ni,ni->n", G, np.linalg.solve(H, G[..., None])[..., 0])


def _gh_grid(n):
    if n > 3:
        raise ValueError("Gaussian quadrature limited to n <= 3; use Monte Carlo")
    x, w = hermegauss(_GH_NODES)
    w = w / math.sqrt(2 * math.pi)
    grids = np.meshgrid(*([x] * n), indexing="ij")
    X = np.stack([gr.ravel() for gr in grids], axis=1)
    W = np.ones(X.shape[0])
    for wg in np.meshgrid(*([w] * n), indexing="ij"):
        W = W * wg.ravel()
    return X, W


def _custom_expect(mu: Custom1D, funcs):
    grid = np.linspace(mu.a, mu.b, 2001)
    vmin = float(np.min(mu.V0(grid)))

    def dens(t):
        return math.exp(-(float(mu.V0(np.array([t]))[0]) - vmin))

    kw = dict(epsabs=1e-14, epsrel=1e-13, limit=500)
    out = []
    # integrands that vanish by symmetry trip quadpack's roundoff detector at these tolerances
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        Z, _ = integrate.quad(dens, mu.a, mu.b, **kw)
        for phi in funcs:
            val, _ = integrate.quad(lambda t: phi(np.array([[t]]))[0] * dens(t), mu.a, mu.b, **kw)
            out.append(val / Z)
    return np.array(out), Z, vmin


def _quadrature_expect(mu, funcs):
    """E_mu[phi] for each vectorized phi (rows of X -> values)."""
    if isinstance(mu, Gaussian):
        X, W = _gh_grid(mu.dim)
        return np.array([W @ phi(X) for phi in funcs])
    if isinstance(mu, Custom1D):
        return _custom_expect(mu, funcs)[0]
    if isinstance(mu, TiltedUniform):
        if mu.dim > 2:
            raise ValueError("cell quadrature limited to n <= 2")
        vals, _ = tilted_quadrature(mu.body, mu.theta, [lambda x, f=phi: f(x[None, :])[0] for phi in funcs])
        return vals
    raise TypeError(f"unsupported measure {mu!r}")


def _draw(mu, est: MonteCarlo):
    rng = np.random.default_rng(est.seed)
    if isinstance(mu, Gaussian):
        return rng.standard_normal((est.samples, mu.dim))
    if isinstance(mu, Custom1D):
        grid = np.linspace(mu.a, mu.b, 2001)
        vmin = float(np.min(mu.V0(grid)))
        out = []
        have = 0
        while have < est.samples:
            x = rng.uniform(mu.a, mu.b, size=2 * est.samples)
            keep = x[rng.random(x.size) < np.exp(-(mu.V0(x) - vmin))]
            out.append(keep)
            have += keep.size
        return np.concatenate(out)[: est.samples, None]
    if isinstance(mu, TiltedUniform):
        return sample(mu.body, mu.theta, est.samples, SamplerConfig(seed=est.seed))
    raise TypeError(f"unsupported measure {mu!r}")


def _moments(mu, g, estimator, need_g: bool = True):
    """var_g, bl_form, cov_gv, var_v (+ influence values in the Monte Carlo case)."""
    if estimator == QUADRATURE:
        if isinstance(mu, TiltedUniform) and mu.dim > 2 and not need_g:
            e = eval_exact(mu.body, mu.theta)
            return {"var_v": float(mu.theta @ e.covariance @ mu.theta)}, None
        Vf = mu.V
        if not need_g:
            (mv,) = _quadrature_expect(mu, [Vf])
            (vv,) = _quadrature_expect(mu, [lambda X: (Vf(X) - mv) ** 2])
            return {"var_v": float(vv)}, None
        gf = lambda X: g.value(X, mu)  # noqa: E731
        mg, mv = _quadrature_expect(mu, [gf, Vf])
        vg, bl, cgv, vv = _quadrature_expect(mu, [
            lambda X: (gf(X) - mg) ** 2,
            lambda X: _bl_integrand(mu, g, X),
            lambda X: (gf(X) - mg) * (Vf(X) - mv),
            lambda X: (Vf(X) - mv) ** 2,
        ])
        return {"var_g": float(vg), "bl_form": float(bl), "cov_gv": float(cgv), "var_v": float(vv)}, None

    X = _draw(mu, estimator)
    N = X.shape[0]
    Vc = mu.V(X)
    Vc = Vc - Vc.mean()
    vv = float(Vc @ Vc / (N - 1))
    infl = {"var_v": Vc**2 - vv}
    out = {"var_v": vv}
    if need_g:
        gc = g.value(X, mu)
        gc = gc - gc.mean()
        q = _bl_integrand(mu, g, X)
        out["var_g"] = float(gc @ gc / (N - 1))
        out["bl_form"] = float(q.mean())
        out["cov_gv"] = float(gc @ Vc / (N - 1))
        infl["var_g"] = gc**2 - out["var_g"]
        infl["bl_form"] = q - out["bl_form"]
        infl["cov_gv"] = gc * Vc - out["cov_gv"]
    return out, infl


def _mc_se(influence) -> float:
    return float(batch_means_stderr(influence))


def varentropy_check(mu, estimator=QUADRATURE, name: str = "") -> InequalityReport:
    """var_mu V <= n."""
    m, infl = _moments(mu, None, estimator, need_g=False)
    n = mu.dim
    lhs = m["var_v"]
    slack = n - lhs
    if infl is None:
        se, tol = None, QUAD_TOL
    else:
        se = _mc_se(infl["var_v"])
        tol = 3 * se
    return InequalityReport(name or f"varentropy:{_mu_name(mu)}", lhs, float(n), dict(m), slack, se,
                            bool(slack >= -tol), tol)


def _require_smooth(mu):
    if isinstance(mu, TiltedUniform):
        raise ValueError("Brascamp-Lieb checks need hess V > 0; a tilted uniform potential is linear")


def dimensional_bl_check(mu, g, estimator=QUADRATURE, name: str = "") -> InequalityReport:
    """var g <= E<grad g, (hess V)^{-1} grad g> - cov(g, V)^2 / (n - var V)."""
    _require_smooth(mu)
    n = mu.dim
    m, infl = _moments(mu, g, estimator)
    vv, C = m["var_v"], m["cov_gv"]
    if vv >= n - 1e-12:
        raise ValueError(f"var V = {vv} is not below n = {n}; denominator degenerates")
    improvement = C**2 / (n - vv)
    rhs = m["bl_form"] - improvement
    lhs = m["var_g"]
    slack = rhs - lhs
    terms = dict(m, improvement=improvement)
    if infl is None:
        se, tol = None, QUAD_TOL
    else:
        psi = (infl["bl_form"] - 2 * C / (n - vv) * infl["cov_gv"]
               - C**2 / (n - vv) ** 2 * infl["var_v"] - infl["var_g"])
        se = _mc_se(psi)
        tol = 3 * se
    return InequalityReport(name or f"dimensional-bl:{_mu_name(mu)}:{_g_name(g)}", lhs, rhs, terms, slack,
                            se, bool(slack >= -tol), tol)


def classical_bl_check(mu, g, estimator=QUADRATURE, name: str = "") -> InequalityReport:
    """var g <= E<grad g, (hess V)^{-1} grad g>; also records the dimensional right-hand side."""
    _require_smooth(mu)
    n = mu.dim
    m, infl = _moments(mu, g, estimator)
    rhs = m["bl_form"]
    lhs = m["var_g"]
    slack = rhs - lhs
    vv = m["var_v"]
    rhs_dim = rhs - m["cov_gv"] ** 2 / (n - vv) if vv < n else -math.inf
    terms = dict(m, rhs_dimensional=rhs_dim)
    if infl is None:
        se, tol = None, QUAD_TOL
    else:
        se = _mc_se(infl["bl_form"] - infl["var_g"])
        tol = 3 * se
    passed = slack >= -tol and rhs >= rhs_dim
    return InequalityReport(name or f"classical-bl:{_mu_name(mu)}:{_g_name(g)}", lhs, rhs, terms, slack,
                            se, bool(passed), tol)


def varentropy_sharp_bound(mu, estimator=QUADRATURE) -> tuple[float, float]:
    """(var V, n Q / (n + Q)) with Q = E<grad V, (hess V)^{-1} grad V>."""
    _require_smooth(mu)
    m, _ = _moments(mu, PotentialItself(), estimator)
    Q = m["bl_form"]
    n = mu.dim
    return m["var_v"], n * Q / (n + Q)


def hormander_identity_check(V: Custom1D, u, name: str = "") -> IdentityReport:
    """Both sides of E[(L u)^2] = E[V'' u'^2] + E[u''^2] by adaptive quadrature on [a, b].

    The integration-by-parts boundary flux is estimated at the endpoints;
    a flux above 1e-10 means the identity does not apply on this interval.
    """
    mu = V

    def up(X):
        return u.grad(X, mu)[:, 0]

    def upp(X):
        return u.hess(X, mu)[:, 0, 0]

    def Lu(X):
        return -upp(X) + mu.dV(X[:, 0]) * up(X)

    (lhs, vpp_term, hs_term), Z, vmin = _custom_expect(mu, [
        lambda X: Lu(X) ** 2,
        lambda X: mu.d2V(X[:, 0]) * up(X) ** 2,
        lambda X: upp(X) ** 2,
    ])
    rhs = vpp_term + hs_term
    ends = np.array([[mu.a], [mu.b]])
    rho = np.exp(-(mu.V0(ends[:, 0]) - vmin)) / Z
    boundary = float(np.sum(rho * (np.abs(Lu(ends) * up(ends)) + np.abs(up(ends) * upp(ends)))))
    if boundary > BOUNDARY_TOL:
        raise ValueError(f"boundary flux {boundary:.3e} exceeds {BOUNDARY_TOL:g}; widen the interval")
    scale = max(abs(lhs), abs(rhs))
    residual = abs(lhs - rhs) / scale if scale > 0 else 0.0
    return IdentityReport(name or f"hormander:{mu.name}:{_g_name(u)}", float(lhs), float(rhs), residual, boundary,
                          bool(residual <= IDENTITY_TOL), {"hess_term": vpp_term, "hs_term": hs_term})


def tensorization_check(K: ConvexBody, K2: ConvexBody, x, x2, tol: float = 1e-12) -> float:
    """|f*_{K x K2}(x, x2) - f*_K(x) - f*_{K2}(x2)|, the product triangulated as one polytope."""
    x = np.asarray(x, dtype=float).reshape(K.dim)
    x2 = np.asarray(x2, dtype=float).reshape(K2.dim)
    joint = conjugate(Product(K, K2), np.concatenate([x, x2]), tol=tol, product_path=False)
    left = conjugate(K, x, tol=tol)
    right = conjugate(K2, x2, tol=tol)
    return abs(joint.value - left.value - right.value)


def amplify_nu(nu, n: int, k_max: int) -> float:
    """min over 1 <= k <= k_max of nu(k n) / k, for nu a callable or a mapping."""
    if k_max < 1:
        raise ValueError("k_max must be positive")
    get = nu.__getitem__ if hasattr(nu, "__getitem__") else nu
    return min(get(k * n) / k for k in range(1, k_max + 1))


# ---------------------------------------------------------------------------
# catalogs

def _mu_name(mu) -> str:
    if isinstance(mu, Gaussian):
        return f"gaussian{mu.dim}"
    if isinstance(mu, Custom1D):
        return mu.name
    if isinstance(mu, TiltedUniform):
        return f"tilted[{type(mu.body).__name__.lower()}{mu.body.dim}]({','.join(f'{t:g}' for t in mu.theta)})"
    return repr(mu)


def _g_name(g) -> str:
    if isinstance(g, Linear):
        return f"linear({np.asarray(g.a).tolist()})"
    if isinstance(g, Quadratic):
        return f"quadratic({np.asarray(g.Q).tolist()},{np.asarray(g.b).tolist()})"
    if isinstance(g, PotentialItself):
        return "V"
    if isinstance(g, Sine):
        return f"sine({g.freq:g})"
    return repr(g)


def varentropy_catalog():
    """(measure, estimator) pairs covering Gaussians, tilted uniforms and a quartic."""
    return [
        (Gaussian(1), QUADRATURE),
        (Gaussian(2), QUADRATURE),
        (Gaussian(3), MonteCarlo(200_000, seed=3)),
        (Gaussian(5), MonteCarlo(200_000, seed=5)),
        (TiltedUniform(Box.unit(1), [1.0]), QUADRATURE),
        (TiltedUniform(Box.unit(1), [0.0]), QUADRATURE),
        (TiltedUniform(Box.unit(2), [50.0, 50.0]), QUADRATURE),
        (TiltedUniform(Simplex.standard(2), [3.0, -2.0]), QUADRATURE),
        (TiltedUniform(Box.unit(3), [20.0, -5.0, 1.0]), QUADRATURE),
        (TiltedUniform(Simplex.standard(2), [4.0, 1.0]), MonteCarlo(20_000, seed=11)),
        (quartic(), QUADRATURE),
        (cosh_potential(), QUADRATURE),
    ]


def bl_catalog():
    """Twelve (measure, test function) pairs: three potentials times four test functions."""
    potentials = [Gaussian(1), Gaussian(2), quartic()]
    out = []
    for mu in potentials:
        n = mu.dim
        if n == 1:
            gs = [Linear(1.0), Quadratic(1.0, 0.0), PotentialItself(), Sine(1.0)]
        else:
            gs = [Linear(np.array([1.0, 0.5])), Quadratic(np.array([[1.0, 0.3], [0.3, 0.5]]), np.array([0.2, -0.1])),
                  PotentialItself(), Sine(1.0)]
        out.extend((mu, g) for g in gs)
    return out


def hormander_catalog():
    """Twelve (potential, u) pairs on intervals wide enough for negligible boundary flux."""
    potentials = [gaussian_1d(), quartic(0.25, 0.5, -6.0, 6.0), cosh_potential()]
    us = [Linear(1.0), Quadratic(1.0, 0.0), Sine(1.0), PotentialItself()]
    return [(V, u) for V in potentials for u in us]
