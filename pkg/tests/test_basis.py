import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wickflow import basis as B

LINE = B.BasisSpec("hermite-line")
PLANE = B.BasisSpec("hermite-plane-tensor")
CIRCLE = B.BasisSpec("fourier-circle")


def test_first_hermite_function_at_zero():
    assert B.eval_basis(LINE, 1, 0.0) == pytest.approx(math.pi**-0.25, abs=1e-12)
    assert B.eval_basis(LINE, 1, 0.0) == pytest.approx(0.751126, abs=1e-6)


def test_circle_first_cosine_at_zero():
    assert B.eval_basis(CIRCLE, 1, 0.0) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert B.eval_basis(CIRCLE, 0, 1.234) == 1.0


def test_circle_points_reduced_mod_two_pi():
    assert B.eval_basis(CIRCLE, 3, 0.7 + 4 * math.pi) == pytest.approx(B.eval_basis(CIRCLE, 3, 0.7))


def test_cantor_order():
    assert [B.cantor_pair(j) for j in (1, 2, 3, 4, 5, 6)] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


@given(st.integers(1, 10**6))
def test_cantor_roundtrip(j):
    assert B.cantor_index(*B.cantor_pair(j)) == j


def test_gram_circle_exact():
    assert B.gram_residual(CIRCLE, 8) <= 1e-12


def test_gram_plane():
    assert B.gram_residual(PLANE, 16) <= 1e-8


@pytest.mark.parametrize("N", [2.0, 8.0])
def test_gram_scaled_matches_unscaled(N):
    assert B.gram_residual(B.scaled_basis(PLANE, N), 9) <= 1e-8


def test_gram_with_length_and_center():
    spec = B.BasisSpec("hermite-plane-tensor", length=(0.3, 0.12), center=(1.0, 0.5))
    assert B.gram_residual(spec, 256) <= 1e-10


def test_scaled_definition_at_origin():
    S = B.scaled_basis(PLANE, 4.0)
    assert B.eval_basis(S, 1, (0.0, 0.0)) == pytest.approx(0.25 * B.eval_basis(PLANE, 1, (0.0, 0.0)))


@given(st.floats(0.1, 50), st.integers(1, 30), st.floats(-20, 20), st.floats(-200, 200))
def test_scaled_is_rescaled_tensor(N, j, x, y):
    S = B.scaled_basis(PLANE, N)
    want = B.eval_basis(PLANE, j, (x / math.sqrt(N), y / N**1.5)) / N
    assert B.eval_basis(S, j, (x, y)) == pytest.approx(want, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("spec", [LINE, PLANE, CIRCLE, B.scaled_basis(PLANE, 3.0)])
def test_bounded_on_dense_grid(spec):
    grid = np.linspace(-12, 12, 801)
    if spec.dim == 2:
        grid = np.stack(np.meshgrid(grid, grid), -1).reshape(-1, 2)
    js = B.indices(spec, 40)
    vals = np.abs(B.basis_values(spec, js, grid))
    for j, v in zip(js, vals):
        assert v.max() <= B.sup_bound(spec, j) * (1 + 1e-9)


def test_hermite_bound_is_pi_quarter():
    x = np.linspace(-30, 30, 20001)
    H = B.hermite_functions(100, x)
    assert np.abs(H).max() <= math.pi**-0.25 * (1 + 1e-12)


def test_errors():
    with pytest.raises(ValueError):
        B.BasisSpec("wavelet")
    with pytest.raises(ValueError):
        B.eval_basis(LINE, 0, 0.0)
    with pytest.raises(ValueError):
        B.scaled_basis(LINE, 2.0)
    with pytest.raises(ValueError):
        B.gram_matrix(LINE, 200, nodes=10)
