import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wickflow import paths as P
from wickflow import polymers, she, shifts
from wickflow.estimate import MCEstimate, combined_z
from wickflow.rng import normals

CIRCLE_AT_HALF = 1.1803405990160964


def planar_bridge(n, t=0.5):
    law = P.PathLaw("bridge", 2, t=t, steps=16 * n)
    return shifts.PathShift(law, she.default_planar_basis((0.0, 0.0), t))


def test_point_mass_at_zero_gives_one():
    shift = shifts.BayesPointMass((0.0,), (1.0,))
    for s in range(5):
        z = shifts.partition_Zn(shift, normals(s, 7), 10, seed=s)
        assert z.mean == 1.0 and z.stderr == 0.0


def test_deterministic_shift_mean_one():
    m = (0.5, -1.0, 0.25, 2.0)
    est = shifts.mean_one_residual(shifts.DeterministicShift(m), 4, 100_000, 2, seed=3)
    assert est.within(0.0)


def test_deterministic_second_moment_closed_form():
    m = np.array([0.3, -0.4, 0.2])
    a, b = shifts.second_moment(shifts.DeterministicShift(tuple(m)), 3, 50_000, seed=4)
    want = math.exp(float(m @ m))
    assert a.within(want) and b.mean == pytest.approx(want, rel=1e-12)


def test_deterministic_martingale_increments():
    m = np.array([0.3, -0.4, 0.2, 0.5])
    qs = shifts.martingale_increments(shifts.DeterministicShift(tuple(m)), 4, 20_000, seed=5)
    c = np.concatenate([[0.0], np.cumsum(m * m)])
    for k, q in enumerate(qs):
        assert q.within(math.exp(c[k + 1]) - math.exp(c[k]))


def test_planar_bridge_mean_one_and_positive():
    shift = planar_bridge(16)
    est = shifts.mean_one_residual(shift, 16, 20_000, 50, seed=6)
    assert est.within(0.0)
    assert shifts.zero_fraction(shift, 16, 2000, seed=7) == 0.0


def test_martingale_property():
    shift = planar_bridge(8)
    for n in (4, 5):
        assert shifts.mean_one_residual(shift, n, 20_000, 50, seed=8).within(0.0)


def test_second_moment_estimators_agree_small_n():
    law = P.PathLaw("bridge", 1, t=1.0, steps=256)
    shift = shifts.PathShift(law, she.default_spacetime_basis(0.0, 1.0), spacetime=True)
    a, b = shifts.second_moment(shift, 16, 10_000, seed=9)
    assert abs(combined_z(a, b)) <= 4


def test_telescoping_matches_paired_second_moment():
    law = P.PathLaw("bridge", 1, t=1.0, steps=256)
    shift = shifts.PathShift(law, she.default_spacetime_basis(0.0, 1.0), spacetime=True)
    qs = shifts.martingale_increments(shift, 12, 10_000, seed=10)
    total = MCEstimate(1 + math.fsum(q.mean for q in qs),
                       math.sqrt(math.fsum(q.stderr**2 for q in qs)), 10_000, 12, 10)
    _, paired = shifts.second_moment(shift, 12, 10_000, seed=11)
    # the increments share pools, so the stderr sum is conservative only loosely
    assert abs(combined_z(total, paired)) <= 4


def test_shift_identity_linear_observable():
    shift = planar_bridge(8)
    est = shifts.shift_identity_residual(shift, lambda X, m: X[..., 0], 8, 20_000, 50, seed=12)
    assert est.within(0.0)


def test_circle_constant_dual_evaluation():
    a = shifts.circle_intersection_exponential(0.5)
    b = shifts.circle_intersection_quadrature(0.5)
    assert a == pytest.approx(CIRCLE_AT_HALF, abs=1e-13)
    assert abs(a - b) <= 1e-8
    assert shifts.circle_intersection_exponential(0.0) == 1.0
    with pytest.raises(ValueError):
        shifts.circle_intersection_exponential(0.75)


@given(st.floats(0.01, 0.68))
def test_circle_closed_form_vs_quadrature(g):
    a = shifts.circle_intersection_exponential(g)
    assert a == pytest.approx(shifts.circle_intersection_quadrature(g), rel=1e-8)
    # it also equals Gamma(1 - 2 g^2) / Gamma(1 - g^2)^2
    lg = math.lgamma(1 - 2 * g * g) - 2 * math.lgamma(1 - g * g)
    assert a == pytest.approx(math.exp(lg), rel=1e-12)


def test_circle_paired_estimate_quick():
    vals = np.exp(shifts.pair_alphas(shifts.CircleGMC(0.5), 2048, 20_000, seed=13))
    est = MCEstimate.from_samples(vals, 2048, 13)
    assert abs(est.mean / CIRCLE_AT_HALF - 1) <= 0.05


def test_circle_inner_product_is_log_kernel():
    # sum_k 2 g^2 cos(k d) / k -> -2 g^2 log|2 sin(d/2)|
    g, d = 0.5, 1.1
    w = np.array([0.3, 0.3 + d])
    m = shifts.CircleGMC(g).coords(w, 20000)
    a = float(m[0] @ m[1])
    assert a == pytest.approx(-2 * g * g * math.log(2 * math.sin(d / 2)), abs=1e-3)


def test_truncation_gap_bound():
    shift = planar_bridge(8)
    for r in (1.0, 2.0, 4.0):
        def event(m, paths, r=r):
            return np.array([P.holder_norm(P.PathSample(paths.times, p), 0.25) <= r
                             for p in paths.points])
        res = shifts.truncation_gap(shift, event, 8, 2000, seed=14, q_reps=40)
        assert res.holds


def test_lattice_pool_enumeration_matches_exact():
    model = polymers.LatticeModel(5)
    xi = normals(15, model.n_sites)
    lw = shifts.log_weights(model.occupation(), xi)
    pooled = math.fsum(np.exp(lw)) / lw.size
    assert pooled == pytest.approx(polymers.lattice_partition_exact(model, xi), abs=1e-12)


def test_lattice_sampler_matches_exact_in_mean():
    model = polymers.LatticeModel(5)
    xi = normals(16, model.n_sites)
    est = shifts.polymer_expectation(polymers.LatticeShift(model), xi,
                                     lambda m, extra: np.ones(m.shape[0]), 50_000, seed=17)
    assert est.within(polymers.lattice_partition_exact(model, xi))


def test_normalized_average_of_constant_is_one():
    shift = planar_bridge(8)
    r = shifts.normalized_polymer_expectation(shift, normals(18, 8),
                                              lambda m, e: np.ones(m.shape[0]), 200, seed=19)
    assert r.mean == pytest.approx(1.0, abs=1e-12)


def test_reordering_the_basis_leaves_intersections_unchanged():
    shift = planar_bridge(16)
    m = shift.draw(20, 50, 16)
    perm = np.random.default_rng(0).permutation(16)
    a = m[:25] @ m[25:].T
    b = m[:25, perm] @ m[25:, perm].T
    assert np.allclose(a, b, atol=1e-12)


def test_heavy_tail_warning():
    shift = shifts.BayesPointMass((0.0, 3.0), (0.99, 0.01))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        shifts.second_moment(shift, 4, 20_000, seed=21)
    assert any(issubclass(w.category, shifts.HeavyTailWarning) for w in caught)


def test_parallel_blocks_identical():
    shift = planar_bridge(8)
    a = shifts.mean_one_residual(shift, 8, 3000, 20, seed=22, workers=1)
    b = shifts.mean_one_residual(shift, 8, 3000, 20, seed=22, workers=4)
    assert a == b


def test_errors():
    with pytest.raises(ValueError):
        shifts.partition_Zn(planar_bridge(4), np.zeros(4), 1, seed=0)
    with pytest.raises(ValueError):
        shifts.BayesPointMass((0.0, 1.0), (0.5, 0.6))
    with pytest.raises(ValueError):
        shifts.second_moment(planar_bridge(4), 4, 100, seed=0, q_pool=1)
