import numpy as np
import pytest
from hypothesis import given, strategies as st

from wickflow import basis as B
from wickflow import milt
from wickflow import paths as P
from wickflow import shifts
from wickflow.rng import normals

seeds = st.integers(0, 2**63)


@given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(-3, 3), st.floats(-3, 3))
def test_gram_any_length_and_center(l1, l2, c1, c2):
    spec = B.BasisSpec("hermite-plane-tensor", length=(l1, l2), center=(c1, c2))
    assert B.gram_residual(spec, 36) <= 1e-10


@given(seeds, st.integers(1, 63))
def test_coordinates_additive_over_pieces(seed, cut):
    spec = B.BasisSpec("hermite-plane-tensor", length=0.5)
    p = P.sample_bridge(2, 0.0, (0.5, 0.5), 1.0, 1.0, 64, seed)
    whole = P.occupation_coords(p, spec, 10).m
    a = P.occupation_coords(P.PathSample(p.times[:cut + 1], p.points[:cut + 1]), spec, 10).m
    b = P.occupation_coords(P.PathSample(p.times[cut:], p.points[cut:]), spec, 10).m
    assert np.allclose(whole, a + b, atol=1e-13)


@given(seeds)
def test_sampling_is_a_function_of_seed(seed):
    law = P.PathLaw("motion", 2, drift=(0.0, 1.0), steps=16)
    assert np.array_equal(P.sample(law, seed, 3).points, P.sample(law, seed, 3).points)


@given(seeds, st.floats(0.1, 3))
def test_partition_positive(seed, scale):
    law = P.PathLaw("bridge", 2, steps=64)
    shift = shifts.PathShift(law, B.BasisSpec("hermite-plane-tensor", length=0.3), beta=scale)
    z = shifts.partition_Zn(shift, 3 * normals(seed, 12), 20, seed)
    assert z.mean > 0


@given(seeds)
def test_alpha_bilinear(seed):
    a, b, c = normals(seed, (3, 4, 20))
    lhs = milt.alpha_n(a + 2 * b, c, 20)
    rhs = milt.alpha_n(a, c, 20) + 2 * milt.alpha_n(b, c, 20)
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(st.floats(0.0, 0.7), seeds)
def test_circle_coordinate_norm(g, seed):
    # |m|^2 = 2 g^2 sum_{k<=K} 1/k for every angle
    m = shifts.CircleGMC(g).draw(seed, 5, 40)
    want = 2 * g * g * np.sum(1 / np.arange(1, 21))
    assert np.allclose((m * m).sum(1), want, rtol=1e-12, atol=1e-15)


@given(seeds)
def test_box_count_at_least_one(seed):
    p = P.sample_motion(2, 0.0, 0.0, 1.0, 1.0, 50, seed)
    n = P.box_count(p, 0.1, 0.05)
    assert 1 <= n <= 21


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_deterministic_shift_partition_is_exponential(m):
    xi = np.array([0.3, -0.7, 1.1])
    z = shifts.partition_Zn(shifts.DeterministicShift(tuple(m)), xi, 5, 0)
    m = np.array(m)
    assert z.mean == pytest.approx(np.exp(m @ xi - 0.5 * m @ m), rel=1e-12)
