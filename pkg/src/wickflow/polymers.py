"""Exactly solvable polymer models.

Continuous-time chain polymer: for a chain X with generator K and Gaussian
site variables xi,

    p(y, t) = E_Q[exp(sum_z X(z) xi_z - X(z)^2 / 2) 1(X_t = y)]

with X(z) the time spent at z. Averaging over xi gives the transition matrix
exp(tK).

Lattice polymer in 1+1 dimensions: a simple random walk of n steps visits
one site (x, t) per time; with m_i the visit indicator of site i,
Z = 2^{-n} sum over paths of exp(sum_i xi_i m_i - m_i^2 / 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.linalg import expm
from scipy.special import comb

from . import paths as _paths
from .estimate import MCEstimate, block_map, block_sizes
from .rng import derive_seed, normals, uniforms
from .shifts import ShiftSampler

MAX_LATTICE_STEPS = 20


@dataclass(frozen=True)
class ChainModel:
    K: tuple
    start: int
    t: float

    def __post_init__(self):
        K = _paths.check_generator(self.K)
        if K.shape[0] < 2:
            raise ValueError("chain needs at least two states")
        if not 0 <= self.start < K.shape[0]:
            raise ValueError("start state out of range")
        if self.t < 0:
            raise ValueError("horizon must be nonnegative")
        object.__setattr__(self, "K", tuple(map(tuple, K.tolist())))

    @property
    def generator(self) -> np.ndarray:
        return np.array(self.K, dtype=float)

    @property
    def d(self) -> int:
        return len(self.K)


def random_generator(d: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Generator with uniform(0, scale) off-diagonal rates."""
    K = scale * uniforms(seed, (d, d))
    np.fill_diagonal(K, 0.0)
    np.fill_diagonal(K, -K.sum(axis=1))
    return K


def chain_transition_exact(model: ChainModel) -> np.ndarray:
    """exp(tK) by scaling and squaring with Pade approximants."""
    P = expm(model.t * model.generator)
    if not np.all(np.isfinite(P)):
        raise RuntimeError("matrix exponential did not converge")
    return P


def _chain_weights(model, xi, bseed, size):
    state, occ = _paths.sample_chain_batch(model.generator, model.start, model.t,
                                           derive_seed(bseed, 0), size)
    x = xi if xi is not None else normals(derive_seed(bseed, 1), (size, model.d))
    w = np.exp(np.sum(occ * x - 0.5 * occ**2, axis=-1))
    return state, w


def chain_partition_mc(model: ChainModel, xi, y: int, reps: int, seed: int,
                       block: int = 10000, workers=None) -> MCEstimate:
    """Monte Carlo estimate of p(y, t) for a fixed site field ``xi``."""
    if not 0 <= y < model.d:
        raise ValueError("target state out of range")
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (model.d,):
        raise ValueError("xi needs one entry per state")
    if model.t == 0:
        v = float(model.start == y)
        return MCEstimate(v, 0.0, reps, model.d, seed, f"p({y})")
    parts = block_map(partial(_chain_weights, model, xi), seed, block_sizes(reps, block), workers)
    vals = np.concatenate([w * (s == y) for s, w in parts])
    return MCEstimate.from_samples(vals, model.d, seed, f"p({y})")


def chain_mean_solution(model: ChainModel, reps: int, seed: int, block: int = 10000,
                        workers=None) -> list:
    """E_P of the chain solution for every target state: each replica draws
    a fresh site field and a chain path. The means estimate row ``start`` of
    exp(tK)."""
    parts = block_map(partial(_chain_weights, model, None), seed, block_sizes(reps, block), workers)
    state = np.concatenate([p[0] for p in parts])
    w = np.concatenate([p[1] for p in parts])
    return [MCEstimate.from_samples(w * (state == y), model.d, seed, f"E p({y})")
            for y in range(model.d)]


@dataclass(frozen=True)
class LatticeModel:
    """Simple random walk of ``n_steps`` steps on the even sublattice.

    Sites (x, t), 0 <= t <= n_steps, |x| <= t, x = t mod 2, are enumerated by
    time and then by x.
    """

    n_steps: int

    def __post_init__(self):
        if not 0 <= self.n_steps <= MAX_LATTICE_STEPS:
            raise ValueError(f"n_steps must lie in 0..{MAX_LATTICE_STEPS}")

    @property
    def sites(self) -> list:
        return [(x, t) for t in range(self.n_steps + 1) for x in range(-t, t + 1, 2)]

    def site_index(self, x: int, t: int) -> int:
        if not (0 <= t <= self.n_steps and abs(x) <= t and (x - t) % 2 == 0):
            raise ValueError(f"({x}, {t}) is not a reachable site")
        return t * (t + 1) // 2 + (x + t) // 2

    @property
    def n_sites(self) -> int:
        return (self.n_steps + 1) * (self.n_steps + 2) // 2

    def paths(self) -> np.ndarray:
        """Visited site indices of all 2^n paths, shape (2^n, n+1)."""
        n = self.n_steps
        bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
        pos = np.zeros((2**n, n + 1), dtype=np.int64)
        np.cumsum(2 * bits - 1, axis=1, out=pos[:, 1:])
        t = np.arange(n + 1)
        return t * (t + 1) // 2 + (pos + t) // 2

    def occupation(self) -> np.ndarray:
        """0/1 visit matrix m, shape (2^n, n_sites)."""
        idx = self.paths()
        m = np.zeros((idx.shape[0], self.n_sites))
        np.put_along_axis(m, idx, 1.0, axis=1)
        return m


def lattice_partition_exact(model: LatticeModel, xi) -> float:
    """2^{-n} sum over all paths of exp(sum_i xi_i m_i - m_i^2 / 2)."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (model.n_sites,):
        raise ValueError(f"xi needs {model.n_sites} entries")
    idx = model.paths()
    logw = xi[idx].sum(axis=1) - 0.5 * idx.shape[1]
    return math.fsum(np.exp(logw)) / idx.shape[0]


def _gh(nodes=30):
    x, w = hermegauss(nodes)
    return x, w / math.sqrt(2 * math.pi)


def lattice_mean_exact(model: LatticeModel, nodes: int = 30) -> float:
    """E_P of the lattice partition function by Gauss-Hermite quadrature.

    The site variables are independent, so for each path the expectation of
    its weight is the product over sites of one-dimensional quadratures.
    """
    x, w = _gh(nodes)
    m = model.occupation()
    # per-site factor for m_i = 0 and m_i = 1
    f1 = math.fsum(w * np.exp(x - 0.5))
    f0 = math.fsum(w)
    per_path = np.prod(np.where(m > 0, f1, f0), axis=1)
    return math.fsum(per_path) / m.shape[0]


def _normal_moment(k: int) -> float:
    return 0.0 if k % 2 else float(math.prod(range(k - 1, 0, -2)))


def _shifted_moment(mu: float, p: int) -> float:
    return sum(comb(p, k, exact=True) * mu ** (p - k) * _normal_moment(k) for k in range(p + 1))


def lattice_shift_identity_exact(model: LatticeModel, F: dict, nodes: int = 30):
    """Both sides of E_P E_M F(xi, w) = E_{P x Q} F(xi + m(w), w) for a
    polynomial F in the site variables.

    ``F`` maps tuples of site indices (a monomial, repeats allowed) to
    coefficients; the empty tuple is the constant term. Total degree <= 4.
    The left side integrates the weighted monomials by Gauss-Hermite
    quadrature site by site; the right side uses closed-form moments of
    shifted Gaussians.
    """
    x, w = _gh(nodes)
    m = model.occupation()
    n_paths = m.shape[0]
    lhs_terms, rhs_terms = [], []
    for mono, coef in F.items():
        if len(mono) > 4:
            raise ValueError("polynomials of degree above 4 are not supported")
        powers = {}
        for s in mono:
            if not 0 <= s < model.n_sites:
                raise ValueError(f"site index {s} out of range")
            powers[s] = powers.get(s, 0) + 1
        lhs = np.ones(n_paths)
        rhs = np.ones(n_paths)
        for s in range(model.n_sites):
            p = powers.get(s, 0)
            vals = {mi: math.fsum(w * x**p * np.exp(mi * x - 0.5 * mi * mi)) for mi in (0.0, 1.0)}
            lhs *= np.where(m[:, s] > 0, vals[1.0], vals[0.0])
            if p:
                rhs *= np.where(m[:, s] > 0, _shifted_moment(1.0, p), _shifted_moment(0.0, p))
        lhs_terms.append(coef * math.fsum(lhs) / n_paths)
        rhs_terms.append(coef * math.fsum(rhs) / n_paths)
    return math.fsum(lhs_terms), math.fsum(rhs_terms)


@dataclass(frozen=True)
class LatticeShift(ShiftSampler):
    """Random-walk occupation vectors of a lattice model as a shift sampler
    (coordinates beyond the site count are zero)."""

    model: LatticeModel

    def draw(self, seed, count, n):
        steps = self.model.n_steps
        u = uniforms(seed, (count, steps))
        pos = np.zeros((count, steps + 1), dtype=np.int64)
        np.cumsum(np.where(u < 0.5, -1, 1), axis=1, out=pos[:, 1:])
        t = np.arange(steps + 1)
        idx = t * (t + 1) // 2 + (pos + t) // 2
        m = np.zeros((count, max(n, self.model.n_sites)))
        np.put_along_axis(m, idx, 1.0, axis=1)
        return m[:, :n]

