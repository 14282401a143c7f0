"""Log-Laplace transform of the uniform measure on a polytope.

    f(theta) = ln  integral_K exp(<theta, x>) dx

together with its gradient (mean of p_theta) and Hessian (covariance of
p_theta).

The exact path decomposes K into simplices and integrates each one in closed
form: for a cell with vertices v_0..v_n and y_i = <theta, v_i>,

    integral_cell exp(<theta, x>) dx = n! vol(cell) exp[y_0, ..., y_n]

where exp[...] is the divided difference of exp. Barycentric moments come from
divided differences with repeated nodes. The Monte Carlo path uses hit-and-run
samples and thermodynamic integration for the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import BodyError, ConvexBody, GuardError, Product, SimplexCell
from .sampler import SamplerConfig, batch_means_stderr, estimate_moments, sample

CLUSTER_SPAN = 0.5
_TAYLOR_TERMS = 18
MAX_EXACT_CELLS = 10_000


class EvaluationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    mode: str = "auto"  # auto | exact | mc
    mc_samples: int = 20_000
    ti_steps: int = 16
    seed: int = 0
    sampler: SamplerConfig | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "exact", "mc"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "mc" and self.mc_samples < 1000:
            raise ValueError("mc_samples must be >= 1000 in Monte Carlo mode")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")
        if self.ti_steps < 8:
            raise ValueError("ti_steps must be >= 8")

    def sampler_config(self) -> SamplerConfig:
        if self.sampler is not None:
            return SamplerConfig(self.sampler.burn_in, self.sampler.thinning, self.seed, self.sampler.chains)
        return SamplerConfig(seed=self.seed)


@dataclass(frozen=True, eq=False)
class LogLaplaceEval:
    theta: np.ndarray
    value: float
    mean: np.ndarray
    covariance: np.ndarray
    method: str  # "exact" | "mc"
    std_err: dict | None = None
    value_is_relative: bool = False
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# divided differences of exp

def _dd_rows(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Divided differences exp[Y_b0, ..., Y_bk] for each row b.

    Returns (D, shift) with exp[row] = exp(shift) * D and shift the row
    maximum, so D never overflows.
    """
    Y = np.asarray(Y, dtype=float)
    B, K = Y.shape
    shift = Y.max(axis=1)
    Z = np.sort(Y - shift[:, None], axis=1)
    T = np.empty((K, K, B))
    E = np.exp(Z)
    inv_fact = 1.0 / np.array([math.factorial(i) for i in range(_TAYLOR_TERMS + K)])
    for i in range(K):
        T[i, i] = E[:, i]
        # complete homogeneous polynomials h_m of (z_i..z_j) - z_i, built one node at a time
        h = np.zeros((_TAYLOR_TERMS, B))
        h[0] = 1.0
        for j in range(i + 1, K):
            w = np.minimum(Z[:, j] - Z[:, i], CLUSTER_SPAN)
            for m in range(1, _TAYLOR_TERMS):
                h[m] += w * h[m - 1]
            d = j - i
            T[i, j] = E[:, i] * (inv_fact[d: d + _TAYLOR_TERMS] @ h)
    # nodes more than CLUSTER_SPAN apart: standard recurrence
    for d in range(1, K):
        for i in range(K - d):
            j = i + d
            span = Z[:, j] - Z[:, i]
            far = span >= CLUSTER_SPAN
            if np.any(far):
                rec = (T[i + 1, j, far] - T[i, j - 1, far]) / span[far]
                T[i, j, far] = rec
    return T[0, K - 1], shift


def divided_diff_exp(ys) -> float:
    """Divided difference exp[y_0, ..., y_k]; repeated nodes allowed."""
    y = np.asarray(ys, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("need at least one node")
    if not np.all(np.isfinite(y)):
        raise ValueError("nodes must be finite")
    D, s = _dd_rows(y[None, :])
    with np.errstate(over="ignore"):
        return float(np.exp(s[0]) * D[0])


def log_divided_diff_exp(ys) -> float:
    y = np.asarray(ys, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise ValueError("nodes must be finite")
    D, s = _dd_rows(y[None, :])
    return float(s[0] + np.log(D[0]))


# ---------------------------------------------------------------------------
# per-cell moments

def _cell_moments(verts: np.ndarray, theta: np.ndarray):
    """Log-integrals and barycentric moments for stacked cells.

    Returns (log_integral (C,), lam_mean (C, K), lam_second (C, K, K)),
    with K = n + 1 vertices per cell.
    """
    C, K, n = verts.shape
    Y = verts @ theta  # (C, K)
    D0, s = _dd_rows(Y)

    Y1 = np.concatenate([np.broadcast_to(Y[:, None, :], (C, K, K)), Y[:, :, None]], axis=2)
    D1, _ = _dd_rows(Y1.reshape(C * K, K + 1))
    D1 = D1.reshape(C, K)

    iu, ju = np.triu_indices(K)
    P = iu.size
    Y2 = np.concatenate([np.broadcast_to(Y[:, None, :], (C, P, K)), Y[:, iu, None], Y[:, ju, None]], axis=2)
    D2, _ = _dd_rows(Y2.reshape(C * P, K + 2))
    D2 = D2.reshape(C, P) * np.where(iu == ju, 2.0, 1.0)

    with np.errstate(divide="ignore", invalid="ignore"):
        log_int = s + np.log(D0)
        lam = D1 / D0[:, None]
        sec = D2 / D0[:, None]
    # cells whose integral underflowed carry zero weight; give them harmless moments
    bad = ~(D0 > 0)
    if np.any(bad):
        lam[bad] = 1.0 / K
        sec[bad] = np.where(iu == ju, 2.0, 1.0) / (K * (K + 1))
    L2 = np.empty((C, K, K))
    L2[:, iu, ju] = sec
    L2[:, ju, iu] = sec
    return log_int, lam, L2


def integrate_exp_simplex(cell: SimplexCell, theta):
    """Integral of exp(<theta, x>) over one cell, plus barycentric moments.

    Returns (integral, lambda_means, lambda_second) where lambda_second[i, j]
    is E[lambda_i lambda_j] under the tilted density restricted to the cell.
    """
    v = np.asarray(cell.vertices, dtype=float)
    n = v.shape[1]
    theta = np.asarray(theta, dtype=float).reshape(n)
    log_int, lam, L2 = _cell_moments(v[None], theta)
    with np.errstate(over="ignore"):
        integral = math.factorial(n) * cell.volume * np.exp(log_int[0])
    return float(integral), lam[0], L2[0]


# ---------------------------------------------------------------------------
# evaluators

def _exact_from_cells(verts, vols, theta):
    n = verts.shape[2]
    log_int, lam, L2 = _cell_moments(verts, theta)
    with np.errstate(divide="ignore"):
        logw = np.log(math.factorial(n) * vols) + log_int
    top = np.max(logw)
    if not np.isfinite(top):
        raise EvaluationError("all cell integrals vanished")
    w = np.exp(logw - top)
    total = w.sum()
    value = top + math.log(total)
    w /= total
    cell_means = np.einsum("ck,ckn->cn", lam, verts)
    mean = w @ cell_means
    # second moments centered at the mean to avoid E[xx^T] - mm^T cancellation
    Vc = verts - mean
    cov = np.einsum("c,cki,ckl,clj->ij", w, Vc, L2, Vc)
    cov = 0.5 * (cov + cov.T)
    return value, mean, cov


def eval_exact(body: ConvexBody, theta, *, product_path: bool = True) -> LogLaplaceEval:
    """Exact f(theta), gradient and Hessian by simplicial decomposition.

    With ``product_path`` a ``Product`` body is evaluated factor by factor
    (value adds, covariance is block diagonal); otherwise the product is
    triangulated as a polytope in its own right.
    """
    theta = np.asarray(theta, dtype=float).reshape(body.dim)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    if product_path and isinstance(body, Product):
        t1, t2 = theta[: body.left.dim], theta[body.left.dim:]
        e1 = eval_exact(body.left, t1, product_path=True)
        e2 = eval_exact(body.right, t2, product_path=True)
        n1, n2 = body.left.dim, body.right.dim
        cov = np.zeros((n1 + n2, n1 + n2))
        cov[:n1, :n1] = e1.covariance
        cov[n1:, n1:] = e2.covariance
        return LogLaplaceEval(theta, e1.value + e2.value, np.concatenate([e1.mean, e2.mean]), cov, "exact")
    verts, vols = body.cell_arrays
    value, mean, cov = _exact_from_cells(verts, vols, theta)
    return LogLaplaceEval(theta, value, mean, cov, "exact")


def _log_volume(body: ConvexBody) -> float | None:
    try:
        return math.log(body.volume)
    except (GuardError, BodyError):
        return None


def _trapezoid_halving(s, vals):
    fine = np.trapezoid(vals, s)
    idx = np.arange(0, s.size, 2)
    if idx[-1] != s.size - 1:
        idx = np.append(idx, s.size - 1)
    coarse = np.trapezoid(vals[idx], s[idx])
    return fine, abs(fine - coarse)


def eval_mc(body: ConvexBody, theta, config: EvalConfig | None = None) -> LogLaplaceEval:
    """Monte Carlo moments from hit-and-run; value by thermodynamic integration.

    f(theta) = f(0) + integral_0^1 <theta, grad f(s theta)> ds, with f(0) the
    log-volume when it is computable (otherwise the value is reported
    relative to f(0) and ``value_is_relative`` is set).
    """
    config = config or EvalConfig(mode="mc")
    n = body.dim
    theta = np.asarray(theta, dtype=float).reshape(n)
    scfg = config.sampler_config()
    X = sample(body, theta, config.mc_samples, scfg, stream=0)
    mean, cov, se = estimate_moments(X)

    s_grid = np.linspace(0.0, 1.0, config.ti_steps)
    integrand = np.empty_like(s_grid)
    integrand_se = np.empty_like(s_grid)
    for k, s in enumerate(s_grid):
        Xs = X if k == s_grid.size - 1 else sample(body, s * theta, config.mc_samples, scfg, stream=k + 1)
        proj = Xs @ theta
        integrand[k] = proj.mean()
        integrand_se[k] = batch_means_stderr(proj)
    ti, disc = _trapezoid_halving(s_grid, integrand)
    weights = np.full(s_grid.size, s_grid[1] - s_grid[0])
    weights[[0, -1]] *= 0.5
    stat = float(np.sqrt(np.sum((weights * integrand_se) ** 2)))

    logvol = _log_volume(body)
    value = ti + (logvol if logvol is not None else 0.0)
    std_err = dict(se)
    std_err["value"] = math.hypot(stat, disc)
    extras = {"ti_statistical_error": stat, "ti_discretization_error": disc}
    return LogLaplaceEval(theta, float(value), mean, cov, "mc", std_err, logvol is None, extras)


def exact_feasible(body: ConvexBody) -> bool:
    try:
        if isinstance(body, Product):
            return exact_feasible(body.left) and exact_feasible(body.right)
        return body.cell_arrays[0].shape[0] <= MAX_EXACT_CELLS
    except (GuardError, BodyError):
        return False


def evaluate(body: ConvexBody, theta, config: EvalConfig | None = None, *,
             product_path: bool = True) -> LogLaplaceEval:
    """Dispatch to the exact or Monte Carlo evaluator according to ``config.mode``."""
    config = config or EvalConfig()
    mode = config.mode
    if mode == "auto":
        mode = "exact" if exact_feasible(body) else "mc"
    if mode == "exact":
        return eval_exact(body, theta, product_path=product_path)
    return eval_mc(body, theta, config)
