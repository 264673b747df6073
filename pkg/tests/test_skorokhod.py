import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial.hermite_e import hermegauss

from wickflow import skorokhod as S
from wickflow.skorokhod import Integrand

finite = st.floats(-5, 5)


def test_swap_field():
    G = Integrand(2, lambda x: x[..., ::-1], lambda x: np.zeros_like(x))
    xi = np.array([[0.3, -1.2], [2.0, 0.5]])
    assert np.allclose(S.skorokhod_finite(G, xi), 2 * xi[:, 0] * xi[:, 1])


def test_hermite_values():
    assert S.hermite(2, 2.0) == 3.0
    assert S.hermite(3, 0.0) == 0.0
    assert S.iterate_integral(3, 0.0) == 0.0
    assert S.wick_recursion(1.0, 4, 0.0) == -2.0


@given(st.floats(0.1, 3), finite)
def test_first_wick_step(beta, x):
    assert S.wick_recursion(beta, 1, x) == pytest.approx(1 + beta * x, abs=1e-12)


def test_iterates_are_hermite_on_grid():
    grid = np.arange(-3.0, 4.0)
    for k in range(9):
        assert np.abs(S.iterate_integral(k, grid) - S.hermite(k, grid)).max() <= 1e-9
        for beta in (0.5, 1.0, 2.0):
            want = beta**k * S.hermite(k, 1 / beta + grid)
            assert np.abs(S.wick_recursion(beta, k, grid) - want).max() <= 1e-9


def test_hermite_orthogonality():
    G = S.hermite_gram(8)
    assert np.abs(G - np.diag([math.factorial(i) for i in range(9)])).max() <= 1e-9


@given(finite, finite, st.lists(finite, min_size=3, max_size=3))
def test_linearity(a, b, x):
    G = Integrand(3, lambda v: v**2, lambda v: 2 * v)
    H = Integrand(3, lambda v: np.sin(v), lambda v: np.cos(v))
    aGbH = Integrand(3, lambda v: a * v**2 + b * np.sin(v), lambda v: 2 * a * v + b * np.cos(v))
    lhs = S.skorokhod_finite(aGbH, x)
    rhs = a * S.skorokhod_finite(G, x) + b * S.skorokhod_finite(H, x)
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(a) + abs(b)) * 50)


def test_central_difference_order():
    xi = np.array([[0.7, -1.3]])
    exact = Integrand(2, lambda v: v**3, lambda v: 3 * v**2)
    errs = []
    for h in (4e-2, 2e-2, 1e-2, 5e-3):
        approx = Integrand(2, lambda v: v**3, h=h)
        errs.append(abs(S.skorokhod_finite(approx, xi) - S.skorokhod_finite(exact, xi)).max())
    slopes = np.diff(np.log(errs)) / np.diff(np.log([4e-2, 2e-2, 1e-2, 5e-3]))
    assert slopes.min() >= 1.9
    assert Integrand(1, np.sin).strategy == "central-difference"


def test_adjoint_closed_form_case():
    g, lam = 1.5, 0.7
    est = S.adjoint_residual(S.constant([g]), lambda x: np.sin(lam * x[..., 0]),
                             lambda x: lam * np.cos(lam * x), 100_000, seed=41)
    assert est.within(0.0)
    # both sides against the closed form g lam exp(-lam^2/2) by quadrature
    x, w = hermegauss(60)
    w = w / math.sqrt(2 * math.pi)
    lhs = np.sum(w * g * x * np.sin(lam * x))
    assert lhs == pytest.approx(g * lam * math.exp(-lam**2 / 2), abs=1e-12)


def test_adjoint_identity_field_cosine():
    G = Integrand(1, lambda x: x, lambda x: np.ones_like(x))
    est = S.adjoint_residual(G, lambda x: np.cos(x[..., 0]), lambda x: -np.sin(x), 100_000, seed=42)
    assert est.within(0.0)
    x, w = hermegauss(60)
    w = w / math.sqrt(2 * math.pi)
    left = np.sum(w * (x * x - 1) * np.cos(x))
    right = np.sum(w * x * -np.sin(x))
    assert left == pytest.approx(right, abs=1e-12)


def test_projection_example():
    G = Integrand(2, lambda x: x[..., ::-1], lambda x: np.zeros_like(x))
    est = S.projection_residual(G, 1, 20_000, seed=5)
    assert est.within(0.0)


def test_errors():
    with pytest.raises(ValueError):
        S.skorokhod_finite(S.constant([1.0, 2.0]), np.zeros(3))
    with pytest.raises(ValueError):
        S.wick_recursion(0.0, 2, 1.0)
    with pytest.raises(ValueError):
        S.hermite(-1, 0.0)
    with pytest.raises(ValueError):
        Integrand(0, np.sin)
