"""Mutual and self intersection local times through basis truncation.

The mutual intersection local time of two independent paths is approximated
by alpha_n = sum_{j<=n} m_j m'_j, the inner product of the truncated
occupation measures. Closed-form moments and bounds serve as oracles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import integrate
from scipy.special import erf, gammaln, xlogy

from . import basis as _basis
from . import paths as _paths
from .estimate import MCEstimate, block_map, block_sizes, concat
from .rng import derive_seed
from .shifts import PathShift, ShiftSampler, pair_alphas


def _coords(m):
    if isinstance(m, _paths.OccupationCoordinates):
        return m.m, m.basis
    return np.asarray(m, dtype=float), None


def alpha_n(mA, mB, n: int):
    """Truncated intersection local time sum_{j<=n} m_j w_j (batched over
    leading axes)."""
    a, ba = _coords(mA)
    b, bb = _coords(mB)
    if ba is not None and bb is not None and ba != bb:
        raise ValueError("coordinates were computed in different bases")
    if a.shape[-1] < n or b.shape[-1] < n:
        raise ValueError("coordinate vectors are shorter than n")
    v = np.sum(a[..., :n] * b[..., :n], axis=-1)
    return float(v) if np.ndim(v) == 0 else v


def bridge_1p1_moment_exact(k: int, t: float) -> float:
    """E alpha^k = sqrt(pi) t^{k/2} k! / (2^k Gamma((k+1)/2)) for two
    independent 1D bridges on [0, t] lifted to space-time."""
    if k < 0 or t <= 0:
        raise ValueError("need k >= 0 and t > 0")
    logv = 0.5 * math.log(math.pi) + 0.5 * k * math.log(t) + gammaln(k + 1) \
        - k * math.log(2) - gammaln((k + 1) / 2)
    return math.exp(logv)


def phi_norm_sq(N: float, r: float) -> float:
    """Double integral over t, t' > 0 of

        r^2 e^{-r(t+t')} / (2 pi (t+t')) * exp(-(t-t')^2 N^2 / (2 (t+t'))).

    In u = t+t', v = t-t' (Jacobian 1/2) the inner v-integral over (-u, u) is
    a Gaussian integral done in closed form; the outer u-integral is adaptive
    quadrature in log u, which absorbs the 1/u singularity at the origin.
    """
    if r <= 0 or N < 0:
        raise ValueError("need r > 0 and N >= 0")

    def inner(u):
        if N == 0:
            return 2 * u
        return math.sqrt(2 * math.pi * u) / N * erf(N * math.sqrt(u / 2))

    def outer(tau):
        u = math.exp(tau)
        return r * r * math.exp(-r * u) / (2 * math.pi * u) * 0.5 * inner(u) * u

    hi = math.log(60.0 / r)
    val, err = integrate.quad(outer, -60.0, hi, epsabs=1e-13, epsrel=1e-12, limit=400)
    if not np.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise RuntimeError(f"quadrature did not converge (error estimate {err:g})")
    return val


def levy_moment_bound(k: int, r: float, phi_sq: float) -> float:
    """k!^2 e^{2r} (phi_sq / r^2)^k, computed in the log domain."""
    if k < 0 or r <= 0 or phi_sq <= 0:
        raise ValueError("need k >= 0, r > 0, phi_sq > 0")
    logv = 2 * gammaln(k + 1) + 2 * r + k * math.log(phi_sq / (r * r))
    return math.exp(logv) if logv < 709 else math.inf


def motion_moment_bound(k: int, t: float) -> float:
    """e k! sqrt(k) (t e / 2pi)^k: moment bound for planar motions from a point."""
    return math.e * math.factorial(k) * math.sqrt(k) * (t * math.e / (2 * math.pi)) ** k


def planar_bridge_moment_bound(k: int, t: float) -> float:
    """4 e k! sqrt(k) (t e / pi)^k: moment bound for planar bridges."""
    return 4 * math.e * math.factorial(k) * math.sqrt(k) * (t * math.e / math.pi) ** k


def expected_cross_alpha(s: float, t: float) -> float:
    """(t log t - s log s - (t-s) log(t-s)) / 2pi: mean intersection local
    time of the pieces B[0,s] and B[s,t] of one planar motion."""
    if not 0 <= s <= t or t <= 0:
        raise ValueError("need 0 <= s <= t and t > 0")
    return float(xlogy(t, t) - xlogy(s, s) - xlogy(t - s, t - s)) / (2 * math.pi)


def moments(values: np.ndarray, ks, n: int, seed: int, label: str = "") -> list:
    v = np.asarray(values, float)
    return [MCEstimate.from_samples(v**k, n, seed, f"{label}k={k}") for k in ks]


def alpha_moments_mc(shift: ShiftSampler, n: int, ks, pairs: int, seed: int,
                     other: ShiftSampler | None = None, block: int = 1000, workers=None) -> list:
    """Monte Carlo moments E alpha_n^k over independent pairs of draws."""
    a = pair_alphas(shift, n, pairs, seed, block, workers, other)
    return moments(a, ks, n, seed)


def cross_alpha_mc(s: float, t: float, n: int, pairs: int, seed: int,
                   basis: _basis.BasisSpec, steps: int | None = None, block: int = 1000,
                   workers=None) -> MCEstimate:
    """alpha_n between independent planar motions run for times s and t - s
    from a common point: the law of the two halves B[0,s], B[s,t] of a single
    motion seen from B(s)."""
    steps = steps or 16 * n
    first = PathShift(_paths.PathLaw("motion", 2, t=s, steps=steps), basis)
    second = PathShift(_paths.PathLaw("motion", 2, t=t - s, steps=steps), basis)
    a = pair_alphas(first, n, pairs, seed, block, workers, other=second)
    return MCEstimate.from_samples(a, n, seed, f"cross-alpha s={s} t={t}")


def _segment_coords(path, spec, n, lo, hi):
    sub = _paths.PathSample(path.times[lo:hi + 1], path.points[:, lo:hi + 1], path.meta)
    return _paths.occupation_coords(sub, spec, n).m


def _dyadic_terms(law, spec, n, depth, bseed, size):
    path = _paths.sample(law, bseed, size)
    S = law.steps
    terms = []
    for level in range(1, depth + 1):
        seg = S >> level
        for k in range(1, 2 ** (level - 1) + 1):
            a0, a1, a2 = (2 * k - 2) * seg, (2 * k - 1) * seg, 2 * k * seg
            ma = _segment_coords(path, spec, n, a0, a1)
            mb = _segment_coords(path, spec, n, a1, a2)
            terms.append(np.sum(ma * mb, axis=1))
    return np.stack(terms, axis=1)


@dataclass(frozen=True)
class SelfIntersection:
    gamma: MCEstimate
    samples: np.ndarray
    centering: np.ndarray


def self_intersection_gamma(law: _paths.PathLaw, depth: int, n: int, reps: int, seed: int,
                            basis: _basis.BasisSpec, pool: int | None = None, block: int = 500,
                            workers=None) -> SelfIntersection:
    """Dyadic self-intersection estimate sum_{l,k} A_{l,k} - E A_{l,k}.

    A_{l,k} is alpha_n between the adjacent dyadic pieces
    [(2k-2)/2^l t, (2k-1)/2^l t] and [(2k-1)/2^l t, 2k/2^l t], l <= depth.
    The centering means come from an independent pool of ``pool`` paths.
    The path grid must split evenly into 2^depth pieces.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if law.steps % (2**depth):
        raise ValueError("steps must be divisible by 2^depth")
    pool = pool or reps
    fn = partial(_dyadic_terms, law, basis, n, depth)
    centre = np.concatenate(block_map(fn, derive_seed(seed, 1), block_sizes(pool, block), workers))
    terms = np.concatenate(block_map(fn, derive_seed(seed, 0), block_sizes(reps, block), workers))
    mean_terms = np.array([math.fsum(c) / c.size for c in centre.T])
    g = np.sum(terms - mean_terms, axis=1)
    return SelfIntersection(MCEstimate.from_samples(g, n, seed, f"gamma depth={depth}"), g, mean_terms)
