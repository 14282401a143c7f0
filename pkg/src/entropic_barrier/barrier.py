"""The entropic barrier f* = conjugate of the log-Laplace transform.

For x in int K the dual point theta = grad f*(x) solves grad f(theta) = x,
found by damped Newton ascent on theta -> <theta, x> - f(theta). Then

    f*(x) = <theta, x> - f(theta),  grad f*(x) = theta,  hess f*(x) = cov_theta^{-1}.

The self-concordance parameter at theta is nu(theta) = <theta, cov_theta theta>,
the variance of <theta, X> under p_theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .geometry import ConvexBody
from .loglaplace import EvalConfig, EvaluationError, eval_exact, evaluate, exact_feasible
from .sampler import batch_means_stderr, sample

INTERIOR_MARGIN = 1e-9
MAX_NEWTON_ITER = 500
MAX_CONDITION = 1e12


class ConjugationError(RuntimeError):
    """Newton iteration failed (near-boundary conditioning or iteration cap)."""


@dataclass(frozen=True, eq=False)
class BarrierPoint:
    x: np.ndarray
    theta: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    newton_decrement: float
    covariance: np.ndarray
    mean: np.ndarray
    iterations: int = 0


def _inverse_spd(cov: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(cov)
    if w[0] <= 0 or w[-1] / w[0] > MAX_CONDITION:
        raise ConjugationError(f"covariance is ill-conditioned (eigenvalues {w[0]:.3e}..{w[-1]:.3e})")
    return (U / w) @ U.T


def conjugate(body: ConvexBody, x, tol: float = 1e-10, *, config: EvalConfig | None = None,
              product_path: bool = True, max_iter: int = MAX_NEWTON_ITER) -> BarrierPoint:
    """Evaluate the entropic barrier at an interior point by damped Newton from theta = 0.

    Steps are scaled by 1/(1 + lambda) while the Newton decrement lambda is at
    least 1/4, and taken in full afterwards; iteration stops once lambda <= tol.
    """
    x = np.asarray(x, dtype=float).reshape(body.dim)
    if body.interior_margin(x) < INTERIOR_MARGIN:
        raise ValueError("x is not strictly inside the body (margin < 1e-9)")
    config = config or EvalConfig(mode="exact")

    def ev(t):
        return evaluate(body, t, config, product_path=product_path)

    theta = np.zeros(body.dim)
    e = ev(theta)
    for it in range(max_iter + 1):
        H = _inverse_spd(e.covariance)
        r = x - e.mean
        step = H @ r
        lam = math.sqrt(max(float(r @ step), 0.0))
        # x - mean is only known to about machine epsilon, which puts a floor under lambda
        floor = 16 * np.finfo(float).eps * (1 + np.abs(x).max()) * math.sqrt(np.linalg.norm(H, 2))
        if lam <= max(tol, floor):
            return BarrierPoint(x, theta, float(theta @ x - e.value), theta.copy(), H, lam,
                                e.covariance, e.mean, it)
        if it == max_iter:
            break
        alpha = 1.0 if lam < 0.25 else 1.0 / (1.0 + lam)
        obj = theta @ x - e.value
        while True:
            trial = theta + alpha * step
            try:
                et = ev(trial)
            except (EvaluationError, FloatingPointError):
                et = None
            if et is not None and trial @ x - et.value >= obj - 1e-14 * (1 + abs(obj)):
                break
            alpha *= 0.5
            if alpha < 1e-12:
                raise ConjugationError("line search stalled")
        theta, e = trial, et
    raise ConjugationError(f"Newton did not converge in {max_iter} iterations (lambda={lam:.3e})")


def barrier_eval(body: ConvexBody, x, **kw):
    bp = conjugate(body, x, **kw)
    return bp.value, bp.gradient, bp.hessian


def sc_parameter_at(body: ConvexBody, theta, config: EvalConfig | None = None) -> float:
    """nu(theta) = <theta, hess f(theta) theta> = var of <theta, X> under p_theta."""
    return _nu(body, theta, config)[0]


def _nu(body, theta, config):
    theta = np.asarray(theta, dtype=float).reshape(body.dim)
    config = config or EvalConfig()
    if config.mode == "exact" or (config.mode == "auto" and exact_feasible(body)):
        e = eval_exact(body, theta)
        return float(theta @ e.covariance @ theta), 0.0
    X = sample(body, theta, config.mc_samples, config.sampler_config())
    p = X @ theta
    pc = p - p.mean()
    nu = float(pc @ pc / (p.size - 1))
    return nu, float(batch_means_stderr(pc ** 2))


@dataclass
class ScReport:
    body_id: str
    samples: list  # (theta, nu) pairs
    nu_max: float
    bound: float
    passed: bool
    tol: float
    mode: str
    errors: list = field(default_factory=list)
    nu_max_theta: np.ndarray | None = None


def sc_sweep(body: ConvexBody, directions: int = 64, max_norm: float = 100.0, seed: int = 0,
             config: EvalConfig | None = None, *, levels: int = 16, body_id: str = "") -> ScReport:
    """Sample nu(theta) over random directions times a geometric ladder of norms.

    Directions from the Chebyshev center toward each vertex (when the
    vertices are enumerable) are added to the random ones. Evaluation
    failures are recorded per sample rather than raised.
    """
    config = config or EvalConfig(mode="exact")
    n = body.dim
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((directions, n))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    try:
        c = body.chebyshev_center()[0]
        V = body.vertices() - c
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        D = np.vstack([D, V])
    except Exception:  # vertex directions are optional extras
        pass
    norms = np.geomspace(max_norm * 1e-3, max_norm, levels)
    mode = "exact" if config.mode == "exact" or (config.mode == "auto" and exact_feasible(body)) else "mc"
    samples, errors = [], []
    nu_max, nu_arg, se_at_max = 0.0, None, 0.0
    for d in D:
        for r in norms:
            th = r * d
            try:
                nu, se = _nu(body, th, config)
            except (EvaluationError, FloatingPointError, ValueError) as exc:
                errors.append((th, str(exc)))
                continue
            samples.append((th, nu))
            if nu > nu_max:
                nu_max, nu_arg, se_at_max = nu, th, se
    if mode == "exact":
        tol = 1e-6
        passed = nu_max <= n * (1 + tol)
    else:
        tol = 3 * se_at_max
        passed = nu_max <= n + tol
    return ScReport(body_id, samples, nu_max, float(n), bool(passed), tol, mode, errors, nu_arg)


def _margin_along(body: ConvexBody, x, h) -> float:
    A, b = body.halfspaces()
    slack = b - A @ x
    Ah = np.abs(A @ h)
    with np.errstate(divide="ignore"):
        return float(np.min(np.where(Ah > 0, slack / Ah, np.inf)))


def third_order_check(body: ConvexBody, x, h, fd_step: float | None = None, tol: float = 1e-3):
    """Finite-difference check of |D^3 f*(x)[h,h,h]| <= 2 <h, hess f*(x) h>^{3/2}.

    The third derivative is the central difference of s -> <h, hess f*(x + s h) h>.
    Returns (lhs, rhs, passed) with lhs the signed third derivative; the test
    uses its absolute value, which covers h and -h at once.
    """
    x = np.asarray(x, dtype=float).reshape(body.dim)
    h = np.asarray(h, dtype=float).reshape(body.dim)
    h = h / np.linalg.norm(h)
    margin = _margin_along(body, x, h)
    if fd_step is None:
        fd_step = 1e-4 * margin
    if margin < 10 * fd_step:
        raise ValueError("finite-difference step too large for the interior margin")

    def q(s):
        H = conjugate(body, x + s * h, tol=1e-12).hessian
        return float(h @ H @ h)

    q0 = q(0.0)
    lhs = (q(fd_step) - q(-fd_step)) / (2 * fd_step)
    rhs = 2 * abs(q0) ** 1.5
    return lhs, rhs, bool(abs(lhs) <= rhs * (1 + tol))


def _cell_quad(verts: np.ndarray, func) -> float:
    """Adaptive quadrature of func over a segment or triangle."""
    n = verts.shape[1]
    if n == 1:
        a, b = sorted((float(verts[0, 0]), float(verts[1, 0])))
        val, _ = integrate.quad(lambda t: func(np.array([t])), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
        return val
    if n == 2:
        v0, e1, e2 = verts[0], verts[1] - verts[0], verts[2] - verts[0]
        jac = abs(e1[0] * e2[1] - e1[1] * e2[0])
        # Duffy map of the unit square onto the triangle
        val, _ = integrate.dblquad(lambda w, u: func(v0 + u * e1 + (1 - u) * w * e2) * (1 - u),
                                   0, 1, 0, 1, epsabs=1e-14, epsrel=1e-12)
        return jac * val
    raise ValueError("quadrature only supported for n <= 2")


def tilted_quadrature(body: ConvexBody, theta, funcs):
    """Expectations of each phi in funcs under p_theta, and ln of the normalizer.

    Adaptive quadrature over the triangulation cells; n <= 2 only.
    """
    theta = np.asarray(theta, dtype=float)
    verts, _ = body.cell_arrays
    shift = float(np.max(verts @ theta))
    Z = sum(_cell_quad(v, lambda x: math.exp(theta @ x - shift)) for v in verts)
    out = []
    for phi in funcs:
        out.append(sum(_cell_quad(v, lambda x: phi(x) * math.exp(theta @ x - shift)) for v in verts) / Z)
    return np.array(out), math.log(Z) + shift


def entropy_identity_check(body: ConvexBody, x) -> float:
    """|f*(x) - integral p ln p| with p = p_theta, theta = grad f*(x), by quadrature (n <= 2)."""
    if body.dim > 2:
        raise ValueError("entropy identity check limited to n <= 2")
    bp = conjugate(body, x, tol=1e-12)
    theta = bp.theta
    verts, _ = body.cell_arrays
    shift = float(np.max(verts @ theta))
    Z = sum(_cell_quad(v, lambda y: math.exp(theta @ y - shift)) for v in verts)
    logZ = math.log(Z)

    def plogp(y):
        a = theta @ y - shift
        return math.exp(a) * (a - logZ)

    H = sum(_cell_quad(v, plogp) for v in verts) / Z
    return abs(bp.value - H)

