import math

import numpy as np
import pytest

from wickflow import paths as P
from wickflow import she, shifts
from wickflow.estimate import combined_z
from wickflow.rng import normals


def test_heat_kernels():
    assert she.heat_kernel(2, (0.0, 0.0), 1.0) == pytest.approx(1 / (2 * math.pi), abs=1e-15)
    assert she.heat_kernel(1, 0.0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    with pytest.raises(ValueError):
        she.heat_kernel(1, 0.0, 0.0)


def test_free_solution_is_kernel():
    q = she.SheQuery("planar", (0.3, -0.1), 0.7, 0)
    assert she.solve_wick(q, [], 10, seed=1).mean == q.kernel()


def test_planar_solution_mean():
    q = she.SheQuery("planar", (0.2, 0.0), 0.5, 16)
    est = she.solution_mean_residual(q, 20_000, 50, seed=2)
    assert est.within(0.0)


def test_1p1_solution_mean():
    q = she.SheQuery("1+1", 0.5, 1.0, 32)
    est = she.solution_mean_residual(q, 20_000, 50, seed=3)
    assert est.within(0.0)


def test_solution_positive():
    q = she.SheQuery("1+1", 0.0, 1.0, 16)
    for s in range(5):
        assert she.solve_wick(q, normals(s, 16), 50, seed=s).mean > 0


def test_first_chaos_coefficient():
    est, exact = she.chaos_coefficient_1p1(0.0, 0.5, 0.0, 1.0, 20_000, seed=4)
    assert exact == pytest.approx(1 / math.pi, abs=1e-15)
    # kernel smoothing at bandwidth 0.02 biases by well under 2%
    assert abs(est.mean - exact) <= 4 * est.stderr + 0.02 * exact


def test_log_scaling_factor():
    assert she.log_scaling_factor(1.0) == pytest.approx(0.5 * math.log(2 * math.pi) + 0.5)
    assert math.isfinite(she.log_scaling_factor(1000.0))


def test_coupling_decays_with_N():
    rows = she.kpz_coupling_experiment([2, 4, 8, 16, 32], 8, 300, seed=5)
    d = [r.d for r in rows]
    assert all(b < a for a, b in zip(d, d[1:]))
    assert all(math.isfinite(r.log_Z) for r in rows)


def test_coupling_trend_small():
    rows = she.kpz_coupling_experiment([4, 64], 16, 1000, seed=6)
    assert rows[1].d <= rows[0].d / 2


def test_small_time_second_moment_stabilizes():
    # planar L2 regime: E Z_n^2 settles as n doubles at t = 0.1
    vals = []
    for n in (16, 32, 64):
        q = she.SheQuery("planar", (0.0, 0.0), 0.1, n)
        _, paired = shifts.second_moment(q.shift(), n, 4000, seed=7)
        vals.append(paired)
    assert abs(combined_z(vals[1], vals[2])) <= 4
    assert vals[2].mean < 2.0


def test_alpha_variance_rows():
    rows = she.alpha_variance_convergence([0.5, 0.2], 0.0, 400, seed=8, n=64, steps=256)
    assert [r.nu for r in rows] == [0.5, 0.2]
    assert all(r.oracle == pytest.approx(1.0) for r in rows)
    with pytest.raises(ValueError):
        she.alpha_variance_convergence([1.5], 0.0, 10, seed=1, n=4, steps=8)


def test_query_validation():
    with pytest.raises(ValueError):
        she.SheQuery("3d", 0.0, 1.0, 4)
    with pytest.raises(ValueError):
        she.SheQuery("planar", 0.0, -1.0, 4)
    q = she.SheQuery("1+1", 0.0, 1.0, 8)
    assert q.shift().spacetime and q.shift().law.steps == 128
