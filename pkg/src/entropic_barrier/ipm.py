"""Linear optimization along the entropic central path.

The minimizer of t<c, x> + f*(x) satisfies grad f*(x) = -t c, hence
x(t) = grad f(-t c): the mean of p_{-tc}. The path is evaluated directly at
each t; no corrector steps are needed. With barrier parameter n the
suboptimality of x(t) is at most n / t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConvexBody
from .loglaplace import EvalConfig, EvaluationError, evaluate

MC_MAX_TILT = 1e3


@dataclass(frozen=True, eq=False)
class PathRecord:
    t: float
    x: np.ndarray
    objective: float
    gap_bound: float


@dataclass(eq=False)
class CentralPathTrace:
    records: list[PathRecord]
    final_x: np.ndarray | None
    certified_value_interval: tuple[float, float] | None
    complete: bool = True
    message: str = ""

    def to_csv_rows(self):
        n = 0 if self.final_x is None else self.final_x.size
        header = ["t"] + [f"x_{i + 1}" for i in range(n)] + ["objective", "gap_bound"]
        rows = [[r.t, *r.x.tolist(), r.objective, r.gap_bound] for r in self.records]
        return header, rows


def central_path_point(body: ConvexBody, c, t: float, config: EvalConfig | None = None) -> np.ndarray:
    """x(t) = grad f(-t c)."""
    c = np.asarray(c, dtype=float).reshape(body.dim)
    if not np.any(c):
        raise ValueError("objective vector c must be nonzero")
    if t <= 0:
        raise ValueError("t must be positive")
    config = config or EvalConfig(mode="exact")
    if config.mode == "mc" and t * np.linalg.norm(c) > MC_MAX_TILT:
        raise EvaluationError(f"t*|c| = {t * np.linalg.norm(c):.3g} exceeds {MC_MAX_TILT:g}; "
                              "use exact mode for large tilts")
    return evaluate(body, -t * c, config).mean


def solve_lp(body: ConvexBody, c, eps: float, config: EvalConfig | None = None) -> CentralPathTrace:
    """Minimize <c, x> over the body, doubling t from 1/|c| until n/t <= eps.

    On evaluator failure the partial trace is returned with ``complete``
    unset and the achieved gap in the certified interval.
    """
    c = np.asarray(c, dtype=float).reshape(body.dim)
    if not np.any(c):
        raise ValueError("objective vector c must be nonzero")
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = body.dim
    t = 1.0 / np.linalg.norm(c)
    records: list[PathRecord] = []
    message = ""
    complete = True
    while True:
        try:
            x = central_path_point(body, c, t, config)
        except (EvaluationError, FloatingPointError) as exc:
            complete = False
            message = str(exc)
            break
        records.append(PathRecord(float(t), x, float(c @ x), n / t))
        if n / t <= eps:
            break
        t *= 2.0
    if not records:
        return CentralPathTrace([], None, None, False, message)
    last = records[-1]
    return CentralPathTrace(records, last.x, (last.objective - last.gap_bound, last.objective), complete, message)


def exact_lp_oracle(body: ConvexBody, c) -> tuple[np.ndarray, float]:
    """Minimize <c, .> over the enumerated vertices; ties go to the lexicographically smallest."""
    c = np.asarray(c, dtype=float).reshape(body.dim)
    V = body.vertices()
    vals = V @ c
    best = vals.min()
    ties = V[vals <= best + 1e-12 * max(1.0, abs(best))]
    order = np.lexsort(ties.T[::-1])
    x = ties[order[0]].copy()
    return x, float(c @ x)
