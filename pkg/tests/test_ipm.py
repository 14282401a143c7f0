import numpy as np
import pytest
from scipy.optimize import linprog

from bodies import hexagon, random_h
from entropic_barrier.geometry import Box, HPolytope, Simplex, random_rotation
from entropic_barrier.ipm import MC_MAX_TILT, central_path_point, exact_lp_oracle, solve_lp
from entropic_barrier.loglaplace import EvalConfig, EvaluationError, eval_exact
from entropic_barrier.sampler import SamplerConfig


def lp_value(body, c):
    A, b = body.halfspaces()
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * body.dim, method="highs")
    assert res.status == 0
    return res.fun


def test_examples():
    trace = solve_lp(Box.unit(2), [1.0, 1.0], 1e-3)
    lo, hi = trace.certified_value_interval
    assert lo - 1e-8 <= 0.0 <= hi
    assert trace.records[-1].gap_bound <= 1e-3
    np.testing.assert_allclose(trace.final_x, 0.0, atol=1e-3)
    trace = solve_lp(Simplex.standard(2), [-1.0, -1.0], 1e-3)
    lo, hi = trace.certified_value_interval
    assert lo - 1e-8 <= -1.0 <= hi


def test_central_path_point_is_tilted_mean():
    x = central_path_point(Box.unit(2), [1.0, -2.0], 3.0)
    np.testing.assert_allclose(x, eval_exact(Box.unit(2), [-3.0, 6.0]).mean, atol=1e-15)


def test_gap_bound_and_monotone_objective():
    for body in (Box.unit(3), hexagon(), random_h(3, 10, 6)):
        rng = np.random.default_rng(0)
        for _ in range(3):
            c = rng.normal(size=body.dim)
            opt = lp_value(body, c)
            trace = solve_lp(body, c, 1e-3)
            objs = [r.objective for r in trace.records]
            assert np.all(np.diff(objs) <= 1e-12)
            for r in trace.records:
                assert r.objective - opt <= body.dim / r.t + 1e-8
                assert r.gap_bound == pytest.approx(body.dim / r.t)


def test_t_schedule_doubles_from_inverse_norm():
    trace = solve_lp(Box.unit(1), [2.0], 1e-2)
    ts = [r.t for r in trace.records]
    assert ts[0] == pytest.approx(0.5)
    np.testing.assert_allclose(np.array(ts[1:]) / np.array(ts[:-1]), 2.0)
    assert 1 / ts[-1] <= 1e-2 < 1 / ts[-2]


def test_oracle_on_rotated_cube():
    rng = np.random.default_rng(1)
    R = random_rotation(3, rng)
    body = HPolytope(np.vstack([R.T, -R.T]), np.ones(6))
    c = rng.normal(size=3)
    x, val = exact_lp_oracle(body, c)
    assert val == pytest.approx(lp_value(body, c), abs=1e-9)
    # closed form: min over the cube [-1,1]^3 of <R^T c, y> = -|R^T c|_1
    assert val == pytest.approx(-np.abs(R.T @ c).sum(), abs=1e-9)


def test_oracle_tie_breaking():
    x, val = exact_lp_oracle(Box.unit(2), [1.0, 0.0])
    assert val == 0.0 and x.tolist() == [0.0, 0.0]


def test_invalid_inputs():
    with pytest.raises(ValueError):
        solve_lp(Box.unit(2), [0.0, 0.0], 1e-3)
    with pytest.raises(ValueError):
        solve_lp(Box.unit(2), [1.0, 0.0], 0.0)


def test_mc_mode_refuses_large_tilts():
    cfg = EvalConfig(mode="mc", mc_samples=1000)
    with pytest.raises(EvaluationError):
        central_path_point(Box.unit(2), [1.0, 0.0], 2 * MC_MAX_TILT, cfg)


def test_mc_trace_stops_with_partial_certificate():
    cfg = EvalConfig(mode="mc", mc_samples=1000, ti_steps=8, sampler=SamplerConfig(burn_in=50, thinning=2))
    trace = solve_lp(Box.unit(1), [1.0], 1e-4, cfg)
    assert not trace.complete and trace.records
    assert "exceeds" in trace.message
    assert trace.certified_value_interval[1] - trace.certified_value_interval[0] > 1e-4


def test_csv_rows():
    trace = solve_lp(Box.unit(2), [1.0, 2.0], 0.5)
    header, rows = trace.to_csv_rows()
    assert header == ["t", "x_1", "x_2", "objective", "gap_bound"]
    assert len(rows) == len(trace.records) and len(rows[0]) == 5
