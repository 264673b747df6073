"""Finite-dimensional Skorokhod integrals and Hermite polynomial identities.

For an integrand G: R^n -> R^n the Skorokhod integral against a standard
Gaussian vector xi is

    S(G)(xi) = sum_j G_j(xi) xi_j - d G_j / d xi_j (xi),

the adjoint of the Gaussian gradient: E[S F] = E[G . grad F].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite_e import hermegauss

from .estimate import MCEstimate
from .rng import derive_seed, normals


@dataclass(frozen=True)
class Integrand:
    """Vector field G on R^n.

    :param n: dimension
    :param G: maps xi of shape (..., n) to G(xi) of shape (..., n)
    :param partials: optional analytic map xi -> (dG_j/dxi_j)_j, shape (..., n)
    :param h: central-difference step used when ``partials`` is missing
    """

    n: int
    G: Callable
    partials: Optional[Callable] = None
    h: float = 1e-5

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if not self.h > 0:
            raise ValueError("difference step must be positive")

    @property
    def strategy(self) -> str:
        return "analytic" if self.partials is not None else "central-difference"

    def diagonal_partials(self, xi: np.ndarray) -> np.ndarray:
        if self.partials is not None:
            return np.asarray(self.partials(xi), dtype=float)
        xi = np.asarray(xi, dtype=float)
        out = np.empty(xi.shape)
        for j in range(self.n):
            # step grows with |xi_j| so the relative rounding error stays flat
            hj = self.h * np.maximum(1.0, np.abs(xi[..., j]))
            up, dn = xi.copy(), xi.copy()
            up[..., j] += hj
            dn[..., j] -= hj
            out[..., j] = (np.asarray(self.G(up))[..., j] - np.asarray(self.G(dn))[..., j]) / (2 * hj)
        return out


def constant(g) -> Integrand:
    g = np.atleast_1d(np.asarray(g, dtype=float))
    return Integrand(g.size, lambda xi: np.broadcast_to(g, np.shape(xi)),
                     lambda xi: np.zeros(np.shape(xi)))


def skorokhod_finite(G: Integrand, xi) -> np.ndarray | float:
    """sum_j G_j(xi) xi_j - dG_j/dxi_j(xi), vectorized over leading axes."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != G.n:
        raise ValueError(f"xi has length {xi.shape[-1]}, integrand has dimension {G.n}")
    val = np.sum(np.asarray(G.G(xi)) * xi - G.diagonal_partials(xi), axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def hermite(k: int, x):
    """Probabilists' Hermite polynomial He_k(x) by the three-term recurrence
    He_{k+1} = x He_k - k He_{k-1}."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for i in range(k):
        prev, cur = cur, x * cur - i * prev
    return float(cur) if cur.ndim == 0 else cur


def skorokhod_poly(p: Polynomial) -> Polynomial:
    """Skorokhod integral of a one-dimensional polynomial integrand, as a
    polynomial: x p(x) - p'(x)."""
    return Polynomial([0.0, 1.0]) * p - p.deriv()


def poly_integrand(p: Polynomial) -> Integrand:
    dp = p.deriv()
    return Integrand(1, lambda xi: p(xi), lambda xi: dp(xi))


def iterate_integral(k: int, xi):
    """Integrate the constant 1 k times: X_k = S(X_{k-1}), X_0 = 1.

    Each step is the Skorokhod integral of the current polynomial with its
    exact derivative; the result equals He_k(xi).
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    p = Polynomial([1.0])
    for _ in range(k):
        p = skorokhod_poly(p)
    xi = np.asarray(xi, dtype=float)
    return float(p(xi)) if xi.ndim == 0 else p(xi)


def wick_recursion(beta: float, k: int, xi):
    """X_k = X_{k-1} + beta S(X_{k-1}) from X_0 = 1, which equals
    beta^k He_k(1/beta + xi)."""
    if beta == 0:
        raise ValueError("beta must be nonzero")
    if k < 0:
        raise ValueError("k must be nonnegative")
    p = Polynomial([1.0])
    for _ in range(k):
        p = p + beta * skorokhod_poly(p)
    xi = np.asarray(xi, dtype=float)
    return float(p(xi)) if xi.ndim == 0 else p(xi)


def hermite_gram(kmax: int, nodes: int = 40) -> np.ndarray:
    """E[He_i He_j] for i, j <= kmax by Gauss-Hermite quadrature (should be
    the diagonal matrix of factorials)."""
    x, w = hermegauss(nodes)
    w = w / np.sqrt(2 * np.pi)
    H = np.array([hermite(k, x) for k in range(kmax + 1)])
    return (H * w) @ H.T


def adjoint_residual(G: Integrand, F: Callable, gradF: Callable, reps: int, seed: int,
                     label: str = "") -> MCEstimate:
    """Monte Carlo estimate of E[S(G) F] - E[G . grad F].

    Both sides use the same Gaussian draws, so the estimate is the mean of
    the per-draw difference.
    """
    xi = normals(seed, (reps, G.n))
    S = skorokhod_finite(G, xi)
    lhs = S * np.asarray(F(xi), dtype=float)
    rhs = np.sum(np.asarray(G.G(xi)) * np.asarray(gradF(xi)), axis=-1)
    return MCEstimate.from_samples(lhs - rhs, G.n, seed, label)


def projection_residual(G: Integrand, n_keep: int, reps: int, seed: int,
                        inner: int = 64, label: str = "") -> MCEstimate:
    """Checks E[S(G) | first n_keep coordinates] = S(E[P G | same]).

    For each outer draw of the kept coordinates, the conditional expectations
    of S(G), of G_j and of dG_j/dxi_j (j <= n_keep) are replaced by averages
    over ``inner`` draws of the discarded coordinates. The residual is the
    difference of the two sides; its mean is zero when the identity holds.
    """
    if not 1 <= n_keep <= G.n:
        raise ValueError("n_keep must lie in 1..n")
    kept = normals(derive_seed(seed, 0), (reps, 1, n_keep))
    rest = normals(derive_seed(seed, 1), (reps, inner, G.n - n_keep))
    xi = np.concatenate([np.broadcast_to(kept, (reps, inner, n_keep)), rest], axis=-1)
    lhs = skorokhod_finite(G, xi).mean(axis=1)
    g = np.asarray(G.G(xi))[..., :n_keep].mean(axis=1)
    dg = G.diagonal_partials(xi)[..., :n_keep].mean(axis=1)
    rhs = np.sum(g * kept[:, 0] - dg, axis=-1)
    return MCEstimate.from_samples(lhs - rhs, G.n, seed, label)
