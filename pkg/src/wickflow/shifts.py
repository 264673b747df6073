"""Randomized-shift partition functions and their moment identities.

A shift sampler draws random coefficient vectors m = (m_1, ..., m_n) from an
auxiliary law Q. Against standard Gaussian coordinates xi the truncated
partition function is

    Z_n(xi) = E_Q exp(sum_{j<=n} m_j xi_j - m_j^2 / 2).

Exponential averages are accumulated in the log domain. Monte Carlo drivers
split replicas into fixed blocks with derived seeds (see ``estimate``), so
results do not depend on the number of workers.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp

from . import basis as _basis
from . import paths as _paths
from .estimate import MCEstimate, block_map, block_sizes, concat
from .rng import derive_seed, normals, uniforms

__all__ = [
    "MCEstimate", "PathShift", "CircleGMC", "BayesPointMass", "DeterministicShift",
    "partition_Zn", "mean_one_residual", "second_moment", "circle_intersection_exponential",
    "circle_intersection_quadrature", "truncation_gap", "polymer_expectation",
    "normalized_polymer_expectation", "shift_identity_residual", "martingale_increments",
    "zero_fraction", "HeavyTailWarning",
]


class HeavyTailWarning(UserWarning):
    pass


class ShiftSampler:
    """Base class: ``draw(seed, count, n)`` returns an array (count, n)."""

    def draw(self, seed: int, count: int, n: int) -> np.ndarray:
        raise NotImplementedError

    def draw_with_paths(self, seed: int, count: int, n: int):
        """Draws plus whatever generated them (paths for path shifts)."""
        return self.draw(seed, count, n), None


@dataclass(frozen=True)
class PathShift(ShiftSampler):
    """Occupation coordinates of a random path, scaled by ``beta``.

    :param law: path law Q
    :param basis: orthonormal basis for the coordinates
    :param spacetime: integrate over the graph (X(s), s) of a 1D path
    :param beta: noise strength multiplying every coordinate
    """

    law: _paths.PathLaw
    basis: _basis.BasisSpec
    spacetime: bool = False
    beta: float = 1.0

    def draw_with_paths(self, seed, count, n):
        p = _paths.sample(self.law, seed, count)
        m = _paths.occupation_coords(p, self.basis, n, self.spacetime).m
        return self.beta * m, p

    def draw(self, seed, count, n):
        return self.draw_with_paths(seed, count, n)[0]


@dataclass(frozen=True)
class CircleGMC(ShiftSampler):
    """m_{2k-1} = gamma cos(k w) / sqrt(k/2), m_{2k} = gamma sin(k w) / sqrt(k/2),
    w uniform on [0, 2 pi)."""

    gamma: float

    def angles(self, seed, count):
        return 2 * math.pi * uniforms(seed, count)

    def coords(self, w: np.ndarray, n: int) -> np.ndarray:
        kmax = (n + 1) // 2
        k = np.arange(1, kmax + 1)
        # powers of exp(i w) by repeated multiplication; error grows like k eps
        z = np.cumprod(np.broadcast_to(np.exp(1j * w)[:, None], (w.size, kmax)), axis=1)
        amp = self.gamma / np.sqrt(k / 2.0)
        m = np.empty((w.size, 2 * kmax))
        m[:, 0::2] = z.real * amp
        m[:, 1::2] = z.imag * amp
        return m[:, :n]

    def draw(self, seed, count, n):
        return self.coords(self.angles(seed, count), n)


@dataclass(frozen=True)
class BayesPointMass(ShiftSampler):
    """m_1 = ... = m_n = w with w drawn from a discrete prior."""

    atoms: tuple
    probs: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, float)
        if len(self.atoms) != p.size or (p < 0).any() or abs(p.sum() - 1) > 1e-12:
            raise ValueError("prior must be a probability vector over the atoms")

    def draw(self, seed, count, n):
        cdf = np.cumsum(self.probs)
        idx = np.minimum(np.searchsorted(cdf, uniforms(seed, count) * cdf[-1]), len(self.atoms) - 1)
        w = np.asarray(self.atoms, float)[idx]
        return np.repeat(w[:, None], n, axis=1)


@dataclass(frozen=True)
class DeterministicShift(ShiftSampler):
    """A fixed vector m (zero beyond its length)."""

    m: tuple

    def draw(self, seed, count, n):
        v = np.zeros(n)
        k = min(n, len(self.m))
        v[:k] = np.asarray(self.m, float)[:k]
        return np.repeat(v[None], count, axis=0)


def log_weights(m: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """log exp(m . xi - |m|^2 / 2) for every pair; shape xi.shape[:-1] + (q,)."""
    return np.asarray(xi) @ m.T - 0.5 * np.sum(m * m, axis=-1)


def _mean_exp(lw: np.ndarray, axis=-1) -> np.ndarray:
    return np.exp(logsumexp(lw, axis=axis) - math.log(lw.shape[axis]))


def partition_Zn(shift: ShiftSampler, xi, q_reps: int, seed: int, label: str = "") -> MCEstimate:
    """Estimate of Z_n(xi) from ``q_reps`` draws of the shift."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = xi.size
    if q_reps < 2:
        raise ValueError("q_reps must be >= 2")
    if n == 0:
        return MCEstimate(1.0, 0.0, q_reps, 0, seed, label)
    lw = log_weights(shift.draw(seed, q_reps, n), xi)
    top = lw.max()
    w = np.exp(lw - top)
    mean = math.exp(top) * math.fsum(w) / q_reps
    sd = math.exp(top) * float(np.std(w, ddof=1))
    return MCEstimate(mean, sd / math.sqrt(q_reps), q_reps, n, seed, label)


def _mean_one_block(shift, n, q_reps, bseed, size):
    m = shift.draw(derive_seed(bseed, 1), q_reps, n)
    xi = normals(derive_seed(bseed, 0), (size, n))
    return _mean_exp(log_weights(m, xi)) - 1.0


def mean_one_residual(shift: ShiftSampler, n: int, p_reps: int, q_reps: int, seed: int,
                      block: int = 1000, workers=None, label: str = "") -> MCEstimate:
    """Estimate of E_P[Z_n] - 1.

    Each block of ``block`` Gaussian draws shares a fresh pool of ``q_reps``
    shift draws. Given the pool, E_P of the pooled Z_n is exactly 1, so the
    residuals are conditionally independent and centered and the usual
    stderr applies.
    """
    if n == 0:
        return MCEstimate(0.0, 0.0, p_reps, 0, seed, label)
    fn = partial(_mean_one_block, shift, n, q_reps)
    vals = concat(block_map(fn, seed, block_sizes(p_reps, block), workers))
    return MCEstimate.from_samples(vals, n, seed, label)


def _pair_block(shift, n, bseed, size):
    m = shift.draw(bseed, 2 * size, n)
    return np.sum(m[:size] * m[size:], axis=1)


def pair_alphas(shift: ShiftSampler, n: int, pairs: int, seed: int, block: int = 1000,
                workers=None, other: ShiftSampler | None = None) -> np.ndarray:
    """sum_{j<=n} m_j m'_j for independent pairs of draws (m from ``shift``,
    m' from ``other`` when given)."""
    if other is None:
        fn = partial(_pair_block, shift, n)
    else:
        fn = partial(_cross_block, shift, other, n)
    return concat(block_map(fn, seed, block_sizes(pairs, block), workers))


def _cross_block(a, b, n, bseed, size):
    ma = a.draw(derive_seed(bseed, 0), size, n)
    mb = b.draw(derive_seed(bseed, 1), size, n)
    return np.sum(ma * mb, axis=1)


def _nested_block(shift, n, q_pool, bseed, size):
    m = shift.draw(derive_seed(bseed, 1), q_pool, n)
    xi = normals(derive_seed(bseed, 0), (size, n))
    lw = log_weights(m, xi)
    top = lw.max(axis=1, keepdims=True)
    w = np.exp(lw - top)
    u = (w.sum(1) ** 2 - (w * w).sum(1)) / (q_pool * (q_pool - 1))
    return math.fsum(u * np.exp(2 * top[:, 0])) / size


def sample_kurtosis(v: np.ndarray) -> float:
    v = np.asarray(v, float)
    c = v - v.mean()
    s2 = np.mean(c * c)
    return float(np.mean(c**4) / s2**2) if s2 > 0 else 0.0


def second_moment(shift: ShiftSampler, n: int, reps: int, seed: int, q_pool: int = 32,
                  p_per_pool: int = 64, block: int = 1000, workers=None,
                  kurtosis_threshold: float = 100.0):
    """Two estimators of E_P[Z_n^2] = E_{Q x Q} exp(sum_{j<=n} m_j m'_j).

    (i) nested: for each Gaussian draw, the unbiased U-statistic of Z_n^2
        over distinct pairs of a shared pool of ``q_pool`` shift draws; pools
        are refreshed every ``p_per_pool`` Gaussian draws and the stderr is
        taken across pools. ``reps`` Gaussian draws in total.
    (ii) paired: exp of the inner product of ``reps`` independent pairs.

    Warns with :class:`HeavyTailWarning` when the sample kurtosis of the
    paired values exceeds ``kurtosis_threshold``.
    """
    if q_pool < 2:
        raise ValueError("q_pool must be >= 2")
    if n == 0:
        one = MCEstimate(1.0, 0.0, reps, 0, seed)
        return one, one
    pools = max(2, -(-reps // p_per_pool))
    fn = partial(_nested_block, shift, n, q_pool)
    nested = concat(block_map(fn, derive_seed(seed, 0), [p_per_pool] * pools, workers))
    est_i = MCEstimate.from_samples(nested, n, seed, "nested")
    vals = np.exp(pair_alphas(shift, n, reps, derive_seed(seed, 1), block, workers))
    est_ii = MCEstimate.from_samples(vals, n, seed, "paired")
    k = sample_kurtosis(vals)
    if k > kurtosis_threshold:
        warnings.warn(f"paired second-moment values have kurtosis {k:.1f}", HeavyTailWarning)
    return est_i, est_ii


def circle_intersection_exponential(gamma: float) -> float:
    """2 Gamma(-2g^2) / (Gamma(1-g^2) Gamma(-g^2)), evaluated with log-Gamma.

    The Gamma functions at negative arguments are handled by log|Gamma| plus
    explicit signs (Gamma is negative on (-1, 0)). At g = 0 both Gamma
    factors have poles and the limit is 1.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    g2 = gamma * gamma
    if 2 * g2 >= 1 - 1e-15:
        raise ValueError("divergent: the intersection exponential is infinite for gamma >= 1/sqrt(2)")
    if g2 == 0:
        return 1.0
    # Gamma(-2g^2) and Gamma(-g^2) are both negative on (-1, 0): signs cancel
    logv = math.log(2) + gammaln(-2 * g2) - gammaln(1 - g2) - gammaln(-g2)
    return math.exp(logv)


def circle_intersection_quadrature(gamma: float) -> float:
    """(1/2pi) int_0^{2pi} |e^{is} - 1|^{-2 g^2} ds by adaptive quadrature.

    By symmetry this is (1/pi) int_0^pi (2 sin(s/2))^{-2g^2} ds; the
    algebraic endpoint singularity s^{-2g^2} is passed to QUADPACK as a weight.
    """
    g2 = gamma * gamma
    if 2 * g2 >= 1:
        raise ValueError("divergent: the intersection exponential is infinite for gamma >= 1/sqrt(2)")
    if g2 == 0:
        return 1.0

    def smooth(s):
        return (2 * math.sin(s / 2) / s) ** (-2 * g2) if s > 0 else 1.0

    val, _ = integrate.quad(smooth, 0.0, math.pi, weight="alg", wvar=(-2 * g2, 0.0),
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / math.pi


@dataclass(frozen=True)
class GapResult:
    gap: MCEstimate
    q_complement: float

    @property
    def bound(self) -> float:
        return 2.0 * self.q_complement

    @property
    def holds(self) -> bool:
        return self.gap.mean <= self.bound + 4 * self.gap.stderr


def _gap_block(shift, event, n, q_reps, bseed, size):
    m, extra = shift.draw_with_paths(derive_seed(bseed, 1), q_reps, n)
    keep = np.asarray(event(m, extra), dtype=bool)
    xi = normals(derive_seed(bseed, 0), (size, n))
    lw = log_weights(m, xi)
    z = np.exp(lw).mean(axis=1)
    za = np.where(keep, np.exp(lw), 1.0).mean(axis=1)
    return np.abs(z - za), float(np.mean(~keep))


def truncation_gap(shift: ShiftSampler, event: Callable, n: int, reps: int, seed: int,
                   q_reps: int = 100, block: int = 1000, workers=None) -> GapResult:
    """Estimate E_P |Z_n(m) - Z_n(1_A m)| next to the bound 2 Q(A^c).

    ``event(m, extra)`` returns a boolean mask over a pool of draws (``extra``
    is the path batch for path shifts). Both partition functions share the
    same pool; Q(A^c) is the pooled empirical frequency.
    """
    fn = partial(_gap_block, shift, event, n, q_reps)
    parts = block_map(fn, seed, block_sizes(reps, block), workers)
    gaps = concat([p[0] for p in parts])
    qc = math.fsum(p[1] for p in parts) / len(parts)
    return GapResult(MCEstimate.from_samples(gaps, n, seed, "truncation-gap"), qc)


def polymer_expectation(shift: ShiftSampler, xi, F: Callable, q_reps: int, seed: int,
                        label: str = "") -> MCEstimate:
    """Unnormalized polymer average E_Q[F exp(m . xi - |m|^2/2)].

    ``F(m, extra)`` maps a pool of draws to observable values.
    """
    xi = np.atleast_1d(np.asarray(xi, float))
    m, extra = shift.draw_with_paths(seed, q_reps, xi.size)
    vals = np.asarray(F(m, extra), float) * np.exp(log_weights(m, xi))
    return MCEstimate.from_samples(vals, xi.size, seed, label)


def normalized_polymer_expectation(shift: ShiftSampler, xi, F: Callable, q_reps: int,
                                   seed: int) -> MCEstimate:
    """Ratio estimator E_Q[F w] / E_Q[w]; biased at order 1/q_reps.
    The stderr is the delta-method value."""
    xi = np.atleast_1d(np.asarray(xi, float))
    m, extra = shift.draw_with_paths(seed, q_reps, xi.size)
    lw = log_weights(m, xi)
    w = np.exp(lw - lw.max())
    f = np.asarray(F(m, extra), float)
    r = math.fsum(f * w) / math.fsum(w)
    resid = w * (f - r) / w.mean()
    se = float(np.std(resid, ddof=1)) / math.sqrt(q_reps)
    return MCEstimate(r, se, q_reps, xi.size, seed, "ratio")


def _identity_block(shift, F, n, q_reps, bseed, size):
    m = shift.draw(derive_seed(bseed, 1), q_reps, n)
    xi = normals(derive_seed(bseed, 0), (size, n))
    w = np.exp(log_weights(m, xi))
    X = np.broadcast_to(xi[:, None, :], (size, q_reps, n))
    lhs = (np.asarray(F(X, m), float) * w).mean(axis=1)
    rhs = np.asarray(F(X + m[None], m), float).mean(axis=1)
    return lhs - rhs


def shift_identity_residual(shift: ShiftSampler, F: Callable, n: int, p_reps: int,
                            q_reps: int, seed: int, block: int = 1000, workers=None,
                            label: str = "") -> MCEstimate:
    """Estimate of E_P E_{M_xi} F(xi, w) - E_{P x Q} F(xi + m(w), w).

    ``F(xi, m)`` takes Gaussian vectors of shape (p, q, n) and the pool of
    shift draws (q, n) and returns values (p, q). Each Gaussian draw is
    paired with the block's pool on both sides.
    """
    fn = partial(_identity_block, shift, F, n, q_reps)
    vals = concat(block_map(fn, seed, block_sizes(p_reps, block), workers))
    return MCEstimate.from_samples(vals, n, seed, label)


def _increment_block(shift, n_max, q_pool, bseed, size):
    m = shift.draw(derive_seed(bseed, 1), q_pool, n_max)
    xi = normals(derive_seed(bseed, 0), (size, n_max))
    terms = xi[:, None, :] * m[None] - 0.5 * m[None] ** 2
    L = np.concatenate([np.zeros((size, q_pool, 1)), np.cumsum(terms, axis=2)], axis=2)
    w = np.exp(L)
    d = w[..., 1:] - w[..., :-1]
    u = (d.sum(1) ** 2 - (d * d).sum(1)) / (q_pool * (q_pool - 1))
    return u.mean(axis=0)


def martingale_increments(shift: ShiftSampler, n_max: int, reps: int, seed: int,
                          q_pool: int = 32, p_per_pool: int = 64, workers=None) -> list:
    """Estimates of q_n = E_P (Z_{n+1} - Z_n)^2 for n = 0 .. n_max-1.

    Uses the unbiased U-statistic over distinct pool pairs, so the partial
    sums 1 + sum q_n estimate E_{Q x Q} exp(sum m_j m'_j).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    pools = max(2, -(-reps // p_per_pool))
    fn = partial(_increment_block, shift, n_max, q_pool)
    rows = np.array(block_map(fn, seed, [p_per_pool] * pools, workers))
    return [MCEstimate.from_samples(rows[:, k], k, seed, f"q_{k}") for k in range(n_max)]


def zero_fraction(shift: ShiftSampler, n: int, reps: int, seed: int, q_reps: int = 100,
                  tiny: float = 1e-12) -> float:
    """Fraction of Z_n samples below ``tiny`` (zero-one law diagnostic)."""
    m = shift.draw(derive_seed(seed, 1), q_reps, n)
    xi = normals(derive_seed(seed, 0), (reps, n))
    return float(np.mean(_mean_exp(log_weights(m, xi)) < tiny))
