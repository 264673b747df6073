"""Solvers for the Wick-ordered heat equation and its convergence experiments.

With Dirac initial data at the origin the truncated solutions are

    planar: u_n(x, t) = p(x, t) Z_n,   Z_n over a planar bridge 0 -> x in time t
    1+1:    z_n(x, t) = q(x, t) Z_n,   Z_n over the graph of a 1D bridge 0 -> x

where p, q are the planar and one-dimensional heat kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import basis as _basis
from . import paths as _paths
from .estimate import MCEstimate, block_map, block_sizes
from .milt import bridge_1p1_moment_exact
from .rng import derive_seed, normals
from .shifts import PathShift, log_weights, mean_one_residual, partition_Zn


def heat_kernel(dim: int, x, t: float, nu: float = 1.0) -> float:
    """Gaussian transition density with variance nu t per coordinate."""
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != dim:
        raise ValueError("point dimension does not match")
    v = nu * t
    return float(np.exp(-np.dot(x, x) / (2 * v)) / (2 * math.pi * v) ** (dim / 2))


def default_spacetime_basis(x: float, t: float) -> _basis.BasisSpec:
    """Tensor Hermite basis centered on the straight line from (0, 0) to
    (x, t), with length scales tuned for bridges of unit horizon."""
    return _basis.BasisSpec("hermite-plane-tensor", length=(0.3 * math.sqrt(t), 0.12 * t),
                            center=(x / 2, t / 2))


def default_planar_basis(x, t: float) -> _basis.BasisSpec:
    x = np.broadcast_to(np.asarray(x, float), (2,))
    return _basis.BasisSpec("hermite-plane-tensor", length=0.3 * math.sqrt(t),
                            center=(x[0] / 2, x[1] / 2))


@dataclass(frozen=True)
class SheQuery:
    """Point query for the truncated solution started from a Dirac mass at 0.

    :param dimension: "planar" or "1+1"
    :param x: endpoint (pair for planar, scalar for 1+1)
    :param t: time
    :param n: truncation level
    :param nu: diffusivity
    :param beta: noise strength
    :param steps: path grid size (default 16 n)
    :param basis: basis override
    """

    dimension: str
    x: tuple
    t: float
    n: int
    nu: float = 1.0
    beta: float = 1.0
    steps: int | None = None
    basis: _basis.BasisSpec | None = field(default=None)

    def __post_init__(self):
        if self.dimension not in ("planar", "1+1"):
            raise ValueError("dimension must be 'planar' or '1+1'")
        if self.t <= 0 or self.n < 0 or self.nu <= 0 or self.beta <= 0:
            raise ValueError("need t > 0, n >= 0 and positive parameters")
        d = 2 if self.dimension == "planar" else 1
        x = np.broadcast_to(np.asarray(self.x, float), (d,))
        object.__setattr__(self, "x", tuple(float(a) for a in x))

    @property
    def dim(self) -> int:
        return len(self.x)

    def shift(self) -> PathShift:
        steps = self.steps or max(16 * self.n, 16)
        law = _paths.PathLaw("bridge", self.dim, 0.0, self.x, self.t, self.nu, 0.0, steps)
        if self.dimension == "planar":
            spec = self.basis or default_planar_basis(self.x, self.t)
            return PathShift(law, spec, False, self.beta)
        spec = self.basis or default_spacetime_basis(self.x[0], self.t)
        return PathShift(law, spec, True, self.beta)

    def kernel(self) -> float:
        return heat_kernel(self.dim, self.x, self.t, self.nu)


def solve_wick(query: SheQuery, xi, q_reps: int, seed: int) -> MCEstimate:
    """Truncated solution u_n = kernel * Z_n for the noise coordinates xi."""
    xi = np.atleast_1d(np.asarray(xi, float)) if query.n else np.zeros(0)
    if xi.size != query.n:
        raise ValueError("xi must have n entries")
    k = query.kernel()
    if query.n == 0:
        return MCEstimate(k, 0.0, q_reps, 0, seed, "free")
    z = partition_Zn(query.shift(), xi, q_reps, seed)
    return MCEstimate(k * z.mean, k * z.stderr, z.reps, z.n, seed, "u_n")


def solution_mean_residual(query: SheQuery, p_reps: int, q_reps: int, seed: int,
                           workers=None) -> MCEstimate:
    """E_P u_n - kernel, which should vanish."""
    r = mean_one_residual(query.shift(), query.n, p_reps, q_reps, seed, workers=workers)
    k = query.kernel()
    return MCEstimate(k * r.mean, k * r.stderr, r.reps, r.n, seed, "E u_n - kernel")


def chaos_coefficient_1p1(y: float, s: float, x: float, t: float, reps: int, seed: int,
                          bandwidth: float = 0.02, steps: int = 1000) -> tuple:
    """First chaos coefficient of the 1+1 solution at (y, s).

    Returns (smoothed, exact): q(x, t) times a Gaussian-kernel estimate of the
    density of the bridge occupation measure at (y, s), and the product
    q(y, s) q(x - y, t - s).
    """
    if not 0 < s < t:
        raise ValueError("need 0 < s < t")
    law = _paths.PathLaw("bridge", 1, 0.0, x, t, 1.0, 0.0, steps)
    p = _paths.sample(law, seed, reps)
    w = _paths.trapezoid_weights(p.times)
    h = bandwidth
    ks = np.exp(-0.5 * ((p.times - s) / h) ** 2) / (h * math.sqrt(2 * math.pi))
    ky = np.exp(-0.5 * ((p.points[..., 0] - y) / h) ** 2) / (h * math.sqrt(2 * math.pi))
    dens = (ky * (w * ks)).sum(axis=1)
    q = heat_kernel(1, x, t)
    est = MCEstimate.from_samples(q * dens, 0, seed, "smoothed")
    exact = heat_kernel(1, y, s) * heat_kernel(1, x - y, t - s)
    return est, exact


@dataclass(frozen=True)
class CouplingRow:
    N: float
    d: float
    log_Z: float
    log_scale: float


def log_scaling_factor(N: float, rho: float = 1.0, s: float = 1.0) -> float:
    """log of sqrt(2 pi rho s) N exp(N^2 s / (2 rho)); never exponentiated."""
    return 0.5 * math.log(2 * math.pi * rho * s) + math.log(N) + N * N * s / (2 * rho)


def _coupled_coords(Ns, n, basis, y, nu, rho, s, beta, steps, xi, bseed, size):
    space = _paths.sample(_paths.PathLaw("bridge", 1, 0.0, y, s, nu * rho, 0.0, steps),
                          derive_seed(bseed, 0), size)
    time = _paths.sample(_paths.PathLaw("bridge", 1, 0.0, 0.0, s, rho, 0.0, steps),
                         derive_seed(bseed, 1), size)
    r = space.times
    limit = beta * _paths.occupation_coords(space, basis, n, spacetime=True).m
    diffs, logw = [], []
    for N in Ns:
        pts = np.concatenate([space.points, time.points / N + r[None, :, None]], axis=-1)
        mN = beta * _paths.occupation_coords(_paths.PathSample(r, pts), basis, n).m
        diffs.append(np.abs(mN - limit).sum(axis=0))
        logw.append(log_weights(mN, xi))
    return np.array(diffs), np.array(logw)


def kpz_coupling_experiment(Ns, n: int, reps: int, seed: int, y: float = 0.0,
                            nu: float = 1.0, rho: float = 1.0, s: float = 1.0, beta: float = 1.0,
                            steps: int | None = None, basis: _basis.BasisSpec | None = None,
                            block: int = 1000, workers=None) -> list:
    """Coordinates of the rescaled planar bridge against their 1+1 limit.

    Shared bridges b_sp (0 -> y, variance nu rho) and b_ti (0 -> 0, variance
    rho) on [0, s] give, for every N,
        m_{N,j} = beta int_0^s e_j(b_sp(r), b_ti(r)/N + r) dr,
    and the limit m_j = beta int_0^s e_j(b_sp(r), r) dr. Each row reports
    d(N) = max_j mean |m_{N,j} - m_j|, log Z_{N,n} for one fixed noise draw,
    and the log of the scaling factor.
    """
    steps = steps or 16 * n
    basis = basis or default_spacetime_basis(y, s)
    xi = normals(derive_seed(seed, 1 << 32), n)
    fn = partial(_coupled_coords, tuple(Ns), n, basis, y, nu, rho, s, beta, steps, xi)
    parts = block_map(fn, seed, block_sizes(reps, block), workers)
    sums = np.sum([p[0] for p in parts], axis=0) / reps
    lw = np.concatenate([p[1] for p in parts], axis=1)
    rows = []
    for i, N in enumerate(Ns):
        top = lw[i].max()
        logZ = top + math.log(math.fsum(np.exp(lw[i] - top)) / reps)
        rows.append(CouplingRow(float(N), float(sums[i].max()), logZ, log_scaling_factor(N, rho, s)))
    return rows


@dataclass(frozen=True)
class AlphaVarianceRow:
    nu: float
    y: float
    estimate: MCEstimate
    oracle: float


def _alpha_sq_block(nu, y, n, basis, steps, bseed, size):
    law = _paths.PathLaw("bridge", 2, (0.0, 0.0), (y, 1.0), 1.0, (1.0, nu * nu), 0.0, steps)
    m = _paths.occupation_coords(_paths.sample(law, bseed, 2 * size), basis, n).m
    a = np.sum(m[:size] * m[size:], axis=1)
    return a * a


def alpha_variance_convergence(nus, y: float, reps: int, seed: int, n: int = 256,
                               steps: int | None = None, basis: _basis.BasisSpec | None = None,
                               block: int = 1000, workers=None) -> list:
    """E alpha_n^2 for pairs of planar bridges (0,0) -> (y,1) with covariance
    diag(1, nu^2), one row per nu; the nu -> 0 limit is the 1+1 value 1."""
    steps = steps or 16 * n
    basis = basis or default_spacetime_basis(y, 1.0)
    oracle = bridge_1p1_moment_exact(2, 1.0)
    rows = []
    for i, nu in enumerate(nus):
        if not 0 < nu <= 1:
            raise ValueError("nu must lie in (0, 1]")
        fn = partial(_alpha_sq_block, nu, y, n, basis, steps)
        vals = np.concatenate(block_map(fn, derive_seed(seed, i), block_sizes(reps, block), workers))
        est = MCEstimate.from_samples(vals, n, seed, f"nu={nu} y={y}")
        rows.append(AlphaVarianceRow(float(nu), float(y), est, oracle))
    return rows
