"""Path samplers and path functionals.

Brownian motions and bridges are sampled exactly on a uniform time grid
(Gaussian increments, bridges by subtracting the linear interpolation of the
endpoint). Continuous-time Markov chains are sampled with exact exponential
holding times. Occupation coordinates m_j = int_0^t e_j(X(s)) ds are computed
by the composite trapezoid rule on the path grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import basis as _basis
from .rng import derive_seed, normals, uniforms

# rough cap on the size of one Hermite factor array (floats)
_CHUNK_FLOATS = 4_000_000


@dataclass(frozen=True)
class PathLaw:
    """Law of a Gaussian path on [0, t] sampled on ``steps`` equal steps.

    :param kind: "bridge" or "motion"
    :param dim: 1 or 2
    :param start: starting point
    :param end: endpoint (bridges only)
    :param t: horizon
    :param cov: diagonal covariance per unit time
    :param drift: drift vector (motions only)
    :param steps: number of grid steps
    """

    kind: str
    dim: int = 2
    start: tuple = 0.0
    end: tuple = 0.0
    t: float = 1.0
    cov: tuple = 1.0
    drift: tuple = 0.0
    steps: int = 256

    def __post_init__(self):
        if self.kind not in ("bridge", "motion"):
            raise ValueError(f"unknown path law {self.kind!r}")
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if int(self.steps) < 1:
            raise ValueError("steps must be >= 1")
        if not self.t > 0:
            raise ValueError("horizon must be positive")
        for name in ("start", "end", "cov", "drift"):
            v = np.broadcast_to(np.asarray(getattr(self, name), float), (self.dim,))
            object.__setattr__(self, name, tuple(float(a) for a in v))
        if min(self.cov) <= 0:
            raise ValueError("covariance entries must be positive")
        object.__setattr__(self, "steps", int(self.steps))


@dataclass
class PathSample:
    """Sampled path(s). ``points`` has shape (steps+1, dim), or
    (reps, steps+1, dim) for a batch drawn from one seed."""

    times: np.ndarray
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def batched(self) -> bool:
        return self.points.ndim == 3


@dataclass
class OccupationCoordinates:
    m: np.ndarray
    basis: _basis.BasisSpec
    meta: dict
    rule: str = "trapezoid"


def time_grid(t: float, steps: int) -> np.ndarray:
    return np.linspace(0.0, t, steps + 1)


def _gaussian_path(law: PathLaw, seed: int, reps) -> PathSample:
    batch = 1 if reps is None else int(reps)
    S, d = law.steps, law.dim
    dt = law.t / S
    z = normals(seed, (batch, S, d)) * np.sqrt(np.asarray(law.cov) * dt)
    w = np.zeros((batch, S + 1, d))
    np.cumsum(z, axis=1, out=w[:, 1:])
    times = time_grid(law.t, S)
    frac = (times / law.t)[None, :, None]
    start = np.asarray(law.start)
    if law.kind == "bridge":
        end = np.asarray(law.end)
        pts = start + w - frac * w[:, -1:, :] + frac * (end - start)
        pts[:, 0] = start
        pts[:, -1] = end
    else:
        pts = start + w + times[None, :, None] * np.asarray(law.drift)
    meta = dict(law=law.kind, dim=d, start=law.start, end=law.end, drift=law.drift,
                cov=law.cov, t=law.t, steps=S, seed=seed, reps=reps)
    return PathSample(times, pts if reps is not None else pts[0], meta)


def sample(law: PathLaw, seed: int, reps: int | None = None) -> PathSample:
    """Draw one path (``reps=None``) or a batch of ``reps`` paths."""
    return _gaussian_path(law, seed, reps)


def sample_bridge(dim, start, end, t, cov, steps, seed, reps=None) -> PathSample:
    """Brownian bridge from ``start`` to ``end`` on [0, t], exact on the grid."""
    return sample(PathLaw("bridge", dim, start, end, t, cov, 0.0, steps), seed, reps)


def sample_motion(dim, start, drift, t, cov, steps, seed, reps=None) -> PathSample:
    """Brownian motion with drift and diagonal covariance, exact on the grid."""
    return sample(PathLaw("motion", dim, start, 0.0, t, cov, drift, steps), seed, reps)


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    dt = np.diff(times)
    w = np.zeros(times.size)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def _as_batch(path: PathSample) -> np.ndarray:
    p = path.points
    if p.ndim == 1:
        p = p[:, None]
    return p if p.ndim == 3 else p[None]


def occupation_coords(path: PathSample, spec: _basis.BasisSpec, n: int,
                      spacetime: bool = False, js=None) -> OccupationCoordinates:
    """Basis coordinates of the occupation measure of a path (or batch).

    With ``spacetime=True`` a one-dimensional path is lifted to its graph
    s -> (X(s), s) before integrating against a planar basis. ``js`` selects
    explicit indices (default: the first n of the family, so the circle starts
    at its constant element). The result has
    shape (n,) for a single path and (reps, n) for a batch.
    """
    pts = _as_batch(path)
    B, S1, d = pts.shape
    need = spec.dim - (1 if spacetime else 0)
    if d != need or (spacetime and spec.dim != 2):
        raise ValueError(f"path of dimension {d} does not match {spec.kind} (spacetime={spacetime})")
    js = _basis.indices(spec, n) if js is None else np.asarray(js, dtype=int)
    w = trapezoid_weights(path.times)
    if spec.dim == 1:
        m = np.empty((B, js.size))
        step = max(1, _CHUNK_FLOATS // max(1, js.size * S1))
        for i in range(0, B, step):
            V = _basis.basis_values(spec, js, pts[i:i + step, :, 0])
            m[i:i + step] = (V @ w).T
    else:
        m = _plane_coords(spec, js, pts, path.times, w, spacetime)
    if not path.batched:
        m = m[0]
    return OccupationCoordinates(m, spec, dict(path.meta), "trapezoid")


def _plane_coords(spec, js, pts, times, w, spacetime):
    B, S1, _ = pts.shape
    ab = np.array([_basis.cantor_pair(j) for j in js], dtype=int).reshape(-1, 2)
    Ka, Kb = int(ab[:, 0].max()) + 1, int(ab[:, 1].max()) + 1
    N = spec.scale_N if spec.kind == "scaled-plane" else 1.0
    sx, sy = (N**-0.5, N**-1.5) if spec.kind == "scaled-plane" else (1.0, 1.0)
    (L1, L2), (c1, c2) = spec.length, spec.center
    norm = 1.0 / (N * math.sqrt(L1 * L2))
    m = np.empty((B, ab.shape[0]))
    if spacetime:
        fy = _basis.hermite_functions(Kb, (times * sy - c2) / L2)  # (Kb, S1)
        fyw = (fy * w).T                                           # (S1, Kb)
    step = max(1, _CHUNK_FLOATS // (max(Ka, Kb) * S1))
    for i in range(0, B, step):
        blk = pts[i:i + step]
        b = blk.shape[0]
        fx = _basis.hermite_functions(Ka, (blk[..., 0] * sx - c1) / L1)  # (Ka, b, S1)
        if spacetime:
            M = (fx.reshape(Ka * b, S1) @ fyw).reshape(Ka, b, Kb).transpose(1, 0, 2)
        else:
            fy = _basis.hermite_functions(Kb, (blk[..., 1] * sy - c2) / L2)
            M = np.matmul((fx * w).transpose(1, 0, 2), fy.transpose(1, 2, 0))
        m[i:i + step] = M[:, ab[:, 0], ab[:, 1]] * norm
    return m


def holder_norm(path: PathSample, kappa: float) -> float:
    """Grid version of sup_{s<t} |X(t) - X(s)| / (t - s)^kappa."""
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    p = path.points
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2:
        raise ValueError("holder_norm takes a single path")
    t = np.asarray(path.times, float)
    best = 0.0
    for lag in range(1, t.size):
        inc = np.linalg.norm(p[lag:] - p[:-lag], axis=-1)
        best = max(best, float(np.max(inc / (t[lag:] - t[:-lag]) ** kappa)))
    return best


def box_count(path: PathSample, eps: float, delta: float) -> int:
    """Most sample points X(delta*i), 0 <= delta*i <= t, in one eps-box.

    Boxes are half-open [k eps, (k+1) eps) per axis. Sample positions off the
    path grid are linearly interpolated.
    """
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    p = path.points
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("box_count takes a single planar path")
    t = path.times
    if delta > t[-1]:
        raise ValueError("delta exceeds the horizon")
    count = int(math.floor(t[-1] / delta * (1 + 1e-12))) + 1
    s = delta * np.arange(count)
    xy = np.stack([np.interp(s, t, p[:, 0]), np.interp(s, t, p[:, 1])], axis=1)
    cells = np.floor(xy / eps).astype(np.int64)
    _, counts = np.unique(cells, axis=0, return_counts=True)
    return int(counts.max())


def check_generator(K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("generator must be a square matrix")
    off = K - np.diag(np.diag(K))
    if (off < 0).any():
        raise ValueError("generator off-diagonal entries must be nonnegative")
    if np.abs(K.sum(axis=1)).max() > 1e-10 * max(1.0, np.abs(K).max()):
        raise ValueError("generator rows must sum to zero")
    return K


def _jump_cdf(K: np.ndarray) -> np.ndarray:
    d = K.shape[0]
    rates = -np.diag(K)
    off = K - np.diag(np.diag(K))
    probs = np.divide(off, rates[:, None], out=np.zeros((d, d)), where=rates[:, None] > 0)
    return np.cumsum(probs, axis=1)


def _run_chain(K, start, t, seed, batch, record):
    d = K.shape[0]
    rates = -np.diag(K)
    cdf_table = _jump_cdf(K)
    state = np.full(batch, start)
    clock = np.zeros(batch)
    occ = np.zeros((batch, d))
    alive = np.ones(batch, bool)
    jumps = []
    rnd = 0
    while alive.any():
        u = uniforms(derive_seed(seed, rnd), (2, batch))
        rnd += 1
        r = rates[state]
        hold = np.divide(-np.log(u[0]), r, out=np.full(batch, np.inf), where=r > 0)
        remaining = t - clock
        jumped = alive & (hold < remaining)
        stay = np.where(jumped, hold, remaining)
        idx = np.nonzero(alive)[0]
        occ[idx, state[idx]] += stay[idx]
        clock = np.where(alive, clock + stay, clock)
        cdf = cdf_table[state]
        nxt = np.minimum((cdf <= (u[1] * cdf[:, -1])[:, None]).sum(axis=1), d - 1)
        state = np.where(jumped, nxt, state)
        if record and jumped[0]:
            jumps.append((float(clock[0]), int(state[0])))
        alive = jumped
    return state, occ, jumps


def sample_chain(K, start: int, t: float, seed: int) -> PathSample:
    """Continuous-time Markov chain with generator K, started at ``start``.

    ``times`` holds 0, the jump times and t; ``points`` holds the state
    occupied from each of those times on (the last entry repeats the final
    state). Holding times are exact exponentials.
    """
    K = _chain_args(K, start, t)
    _, _, jumps = _run_chain(K, start, t, seed, 1, True)
    times = np.array([0.0] + [j[0] for j in jumps] + [t])
    states = [start] + [j[1] for j in jumps]
    points = np.array(states + [states[-1]])
    return PathSample(times, points, dict(law="chain", start=start, t=t, seed=seed))


def sample_chain_batch(K, start: int, t: float, seed: int, reps: int):
    """Final states (reps,) and exact occupation times (reps, d) of ``reps``
    independent chains, drawn from one seed."""
    K = _chain_args(K, start, t)
    state, occ, _ = _run_chain(K, start, t, seed, int(reps), False)
    return state, occ


def _chain_args(K, start, t):
    K = check_generator(K)
    if not 0 <= start < K.shape[0]:
        raise ValueError("start state out of range")
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    return K


def chain_occupation(path: PathSample, d: int) -> np.ndarray:
    """Exact occupation times X(z) from the jump times of a chain sample."""
    occ = np.zeros(d)
    np.add.at(occ, path.points[:-1].astype(int), np.diff(path.times))
    return occ
