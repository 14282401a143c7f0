"""Hit-and-run sampling from exponentially tilted uniform densities on polytopes.

The target is p(x) proportional to exp(<theta, x>) on the body. Along a chord
the conditional density is a truncated exponential, which is sampled exactly
by inversion, so every step is rejection free.

Chains are advanced in lock-step as a vectorized batch. Chain ``c`` draws its
randomness from ``SeedSequence(seed, spawn_key=(stream, c))``; the output is
therefore a function of (body, theta, count, config) alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConvexBody

N_BATCHES = 32


@dataclass(frozen=True)
class SamplerConfig:
    burn_in: int = 1000
    thinning: int = 10
    seed: int = 0
    chains: int = 32

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.thinning < 1:
            raise ValueError("thinning must be positive")
        if self.chains < 1:
            raise ValueError("chains must be positive")


@dataclass
class ChainState:
    position: np.ndarray
    steps_taken: int = 0


class SamplerError(RuntimeError):
    pass


def chord_sample_1d(lo, hi, rate, u):
    """Inverse-CDF draw from the density proportional to exp(rate*s) on [lo, hi].

    Works elementwise on arrays. For |rate*(hi-lo)| < 1e-8 the density is
    treated as uniform.
    """
    lo, hi, rate, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (lo, hi, rate, u)))
    length = hi - lo
    rl = rate * length
    out = lo + u * length
    with np.errstate(all="ignore"):
        small = (np.abs(rl) >= 1e-8) & (np.abs(rl) < 1.0)
        pos = rl >= 1.0
        neg = rl <= -1.0
        safe_rate = np.where(rate == 0, 1.0, rate)
        s_small = lo + np.log1p(u * np.expm1(rl)) / safe_rate
        s_pos = hi + np.log(u + (1 - u) * np.exp(-rl)) / safe_rate
        s_neg = lo + np.log((1 - u) + u * np.exp(rl)) / safe_rate
    out = np.where(small, s_small, out)
    out = np.where(pos, s_pos, out)
    out = np.where(neg, s_neg, out)
    out = np.clip(out, lo, hi)
    return out if out.ndim else float(out)


def _chain_streams(seed: int, stream: int, chains: int):
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, c)))
            for c in range(chains)]


def _chords(A, b, X, D):
    """Feasible step interval [t_lo, t_hi] for X + t D inside {A x <= b}."""
    AD = D @ A.T
    slack = np.maximum(b - X @ A.T, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = slack / AD
    t_hi = np.min(np.where(AD > 1e-300, ratio, np.inf), axis=1)
    t_lo = np.max(np.where(AD < -1e-300, ratio, -np.inf), axis=1)
    return t_lo, t_hi


def sample(body: ConvexBody, theta, count: int, config: SamplerConfig | None = None,
           *, start=None, stream: int = 0) -> np.ndarray:
    """Draw ``count`` points from p_theta on ``body`` by hit-and-run.

    Chains start at the Chebyshev center (or ``start``), discard ``burn_in``
    steps, then keep every ``thinning``-th state. The returned array is
    ordered by (chain, step).
    """
    config = config or SamplerConfig()
    if count < 1:
        raise ValueError("count must be positive")
    A, b = body.halfspaces()
    n = body.dim
    theta = np.asarray(theta, dtype=float).reshape(n)
    C = min(config.chains, count)
    per_chain = np.full(C, count // C)
    per_chain[: count % C] += 1
    n_keep = int(per_chain[0])
    total_steps = config.burn_in + n_keep * config.thinning

    x0 = np.asarray(start if start is not None else body.chebyshev_center()[0], dtype=float)
    X = np.tile(x0, (C, 1))
    rngs = _chain_streams(config.seed, stream, C)
    out = np.empty((C, n_keep, n))
    block = 512
    kept = 0
    step = 0
    while step < total_steps:
        nb = min(block, total_steps - step)
        G = np.stack([r.standard_normal((nb, n)) for r in rngs], axis=1)  # (nb, C, n)
        U = np.stack([r.random(nb) for r in rngs], axis=1)  # (nb, C)
        for k in range(nb):
            D = G[k]
            D /= np.linalg.norm(D, axis=1, keepdims=True)
            t_lo, t_hi = _chords(A, b, X, D)
            if not (np.all(np.isfinite(t_lo)) and np.all(np.isfinite(t_hi))):
                raise SamplerError("chord is unbounded: body is not bounded")
            t = chord_sample_1d(t_lo, t_hi, D @ theta, U[k])
            X = X + t[:, None] * D
            step += 1
            if step > config.burn_in and (step - config.burn_in) % config.thinning == 0:
                out[:, kept] = X
                kept += 1
    # chains beyond count % C contribute one fewer sample
    rows = [out[c, : per_chain[c]] for c in range(C)]
    return np.concatenate(rows, axis=0)


def batch_means_stderr(values, n_batches: int = N_BATCHES) -> np.ndarray:
    """Standard error of the mean of ``values`` (along axis 0) by batch means."""
    v = np.asarray(values, dtype=float)
    k = v.shape[0]
    nb = min(n_batches, k)
    if nb < 2:
        return np.full(v.shape[1:], np.nan)
    size = k // nb
    trimmed = v[: nb * size].reshape((nb, size) + v.shape[1:])
    bm = trimmed.mean(axis=1)
    return bm.std(axis=0, ddof=1) / np.sqrt(nb)


def estimate_moments(samples) -> tuple[np.ndarray, np.ndarray, dict]:
    """Unbiased mean and covariance, with batch-means standard errors (32 batches)."""
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    k = X.shape[0]
    if k < 2:
        raise ValueError("need at least 2 samples")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (k - 1)
    outer = Xc[:, :, None] * Xc[:, None, :]
    std_err = {
        "mean": batch_means_stderr(X),
        "covariance": batch_means_stderr(outer),
    }
    return mean, cov, std_err
