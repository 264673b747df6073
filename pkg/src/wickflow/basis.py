"""Orthonormal families of bounded functions on the line, plane and circle.

Kinds
-----
hermite-line
    e_j(x) = h_{j-1}((x - c) / L) / sqrt(L), h_k the k-th Hermite function.
hermite-plane-tensor
    e_j(x, y) = e^line_{a+1}(x) e^line_{b+1}(y) where (a, b) is the j-th pair of
    the diagonal (Cantor) enumeration of N^2: j=1 -> (0,0), j=2 -> (1,0),
    j=3 -> (0,1), j=4 -> (2,0), ... Along a diagonal d = a + b the first
    index runs from d down to 0.
fourier-circle
    e_0 = 1, e_{2k-1} = sqrt(2) cos(k w), e_{2k} = sqrt(2) sin(k w),
    orthonormal under the uniform probability measure dw / 2pi.
scaled-plane
    e_{N,j}(x, y) = e_j(x / sqrt(N), y / N^1.5) / N with e_j the tensor family.

Length scales L and centers c are per axis. They keep the family orthonormal
and let the caller match the basis to the region a path occupies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

KINDS = ("hermite-line", "hermite-plane-tensor", "fourier-circle", "scaled-plane")
PI_QUARTER = math.pi ** -0.25
DEFAULT_NODES = 64


@dataclass(frozen=True)
class BasisSpec:
    """Orthonormal basis description.

    :param kind: one of ``KINDS``
    :param scale_N: the rescaling parameter N (scaled-plane only)
    :param length: per-axis length scale of the Hermite functions
    :param center: per-axis center of the Hermite functions
    :param nodes: Gauss-Hermite nodes per axis used by :func:`gram_residual`
    """

    kind: str
    scale_N: float = 1.0
    length: tuple = (1.0, 1.0)
    center: tuple = (0.0, 0.0)
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if not self.scale_N > 0:
            raise ValueError("scale_N must be positive")
        object.__setattr__(self, "length", _pair(self.length))
        object.__setattr__(self, "center", _pair(self.center))
        if min(self.length) <= 0:
            raise ValueError("length scales must be positive")

    @property
    def dim(self) -> int:
        return 2 if self.kind in ("hermite-plane-tensor", "scaled-plane") else 1

    @property
    def first_index(self) -> int:
        return 0 if self.kind == "fourier-circle" else 1

    def tensor(self) -> "BasisSpec":
        """The unscaled tensor family behind a scaled-plane spec."""
        return BasisSpec("hermite-plane-tensor", 1.0, self.length, self.center, self.nodes)


def _pair(v) -> tuple:
    if np.ndim(v) == 0:
        return (float(v), float(v))
    a, b = v
    return (float(a), float(b))


def hermite_functions(K: int, x, weighted: bool = True) -> np.ndarray:
    """Hermite functions h_0..h_{K-1} at x, shape (K,) + x.shape.

    Uses the normalized recurrence
    h_{k+1} = sqrt(2/(k+1)) x h_k - sqrt(k/(k+1)) h_{k-1}.
    With ``weighted=False`` the Gaussian factor exp(-x^2/2) is dropped,
    leaving the orthonormal polynomials for the weight exp(-x^2).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((K,) + x.shape)
    if K == 0:
        return out
    out[0] = PI_QUARTER * np.exp(-0.5 * x * x) if weighted else PI_QUARTER
    if K > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, K - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def cantor_pair(j: int) -> tuple[int, int]:
    """Index j >= 1 of the tensor family -> multi-index (a, b)."""
    if j < 1:
        raise ValueError("plane basis indices start at 1")
    i = j - 1
    d = (math.isqrt(8 * i + 1) - 1) // 2
    r = i - d * (d + 1) // 2
    return d - r, r


def cantor_index(a: int, b: int) -> int:
    d = a + b
    return d * (d + 1) // 2 + b + 1


def cantor_pairs(n: int) -> np.ndarray:
    """Multi-indices of e_1..e_n as an (n, 2) integer array."""
    return np.array([cantor_pair(j) for j in range(1, n + 1)], dtype=int).reshape(n, 2)


def indices(spec: BasisSpec, n: int) -> np.ndarray:
    """The first n indices of the family (circle starts at the constant e_0)."""
    return np.arange(spec.first_index, spec.first_index + n)


def _check_index(spec: BasisSpec, js) -> np.ndarray:
    js = np.atleast_1d(np.asarray(js, dtype=int))
    if js.size and js.min() < spec.first_index:
        raise ValueError(f"index below {spec.first_index} for {spec.kind}")
    return js


def _line(spec: BasisSpec, ks: np.ndarray, x, axis: int = 0) -> np.ndarray:
    L, c = spec.length[axis], spec.center[axis]
    K = int(ks.max()) + 1 if ks.size else 0
    H = hermite_functions(K, (np.asarray(x, float) - c) / L)
    return H[ks] / math.sqrt(L)


def _circle(js: np.ndarray, w) -> np.ndarray:
    w = np.mod(np.asarray(w, dtype=float), 2 * math.pi)
    k = (js + 1) // 2
    ang = k.reshape((-1,) + (1,) * w.ndim) * w
    out = np.where((js % 2 == 1).reshape((-1,) + (1,) * w.ndim), np.cos(ang), np.sin(ang))
    out = math.sqrt(2.0) * out
    out[js == 0] = 1.0
    return out


def basis_values(spec: BasisSpec, js, x) -> np.ndarray:
    """Values e_j(x) for every j in ``js``: shape (len(js),) + point shape.

    For plane kinds ``x`` has a trailing axis of length 2.
    """
    js = _check_index(spec, js)
    if spec.kind == "hermite-line":
        return _line(spec, js - 1, x)
    if spec.kind == "fourier-circle":
        return _circle(js, x)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("plane basis needs points with two coordinates")
    N = spec.scale_N
    if spec.kind == "scaled-plane":
        x = x * np.array([N**-0.5, N**-1.5])
    ab = np.array([cantor_pair(j) for j in js], dtype=int).reshape(-1, 2)
    fx = _line(spec, np.arange(ab[:, 0].max() + 1), x[..., 0], 0)
    fy = _line(spec, np.arange(ab[:, 1].max() + 1), x[..., 1], 1)
    out = fx[ab[:, 0]] * fy[ab[:, 1]]
    return out / N if spec.kind == "scaled-plane" else out


def eval_basis(spec: BasisSpec, j: int, x):
    """Single basis element e_j at a point (or array of points)."""
    v = basis_values(spec, [j], x)[0]
    return float(v) if np.ndim(v) == 0 else v


def sup_bound(spec: BasisSpec, j: int) -> float:
    """Uniform bound on |e_j|: Hermite functions never exceed pi^{-1/4}."""
    _check_index(spec, [j])
    if spec.kind == "fourier-circle":
        return 1.0 if j == 0 else math.sqrt(2.0)
    if spec.kind == "hermite-line":
        return PI_QUARTER / math.sqrt(spec.length[0])
    b = PI_QUARTER**2 / math.sqrt(spec.length[0] * spec.length[1])
    return b / spec.scale_N if spec.kind == "scaled-plane" else b


def scaled_basis(spec: BasisSpec, N: float) -> BasisSpec:
    """The N-rescaled planar family e_{N,j}(x,y) = e_j(x/N^.5, y/N^1.5)/N."""
    if spec.kind != "hermite-plane-tensor":
        raise ValueError("scaled_basis takes a hermite-plane-tensor spec")
    if not N > 0:
        raise ValueError("N must be positive")
    return BasisSpec("scaled-plane", float(N), spec.length, spec.center, spec.nodes)


def gram_matrix(spec: BasisSpec, n: int, nodes: int | None = None) -> np.ndarray:
    """Gram matrix of the first n elements under the module's quadrature.

    Gauss-Hermite (weight exp(-t^2) divided out analytically) for line and
    plane kinds; uniform trapezoid for the circle. Raises ValueError when the
    node count cannot integrate the requested products exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    nodes = nodes or spec.nodes
    js = indices(spec, n)
    if spec.kind == "fourier-circle":
        kmax = int(js.max() + 1) // 2
        if 2 * kmax >= nodes:
            raise ValueError(f"{nodes} trapezoid nodes cannot resolve frequency {2 * kmax}")
        w = 2 * math.pi * np.arange(nodes) / nodes
        V = _circle(js, w)
        return V @ V.T / nodes
    if spec.kind == "hermite-line":
        if n > nodes:
            raise ValueError(f"{nodes} Gauss-Hermite nodes are too few for n={n}")
        t, w = roots_hermite(nodes)
        P = hermite_functions(n, t, weighted=False)
        return (P * w) @ P.T
    ab = cantor_pairs(n)
    need = int(ab.max()) + 1
    if need > nodes:
        raise ValueError(f"{nodes} Gauss-Hermite nodes per axis are too few for n={n}")
    t, w = roots_hermite(nodes)
    if spec.kind == "hermite-plane-tensor":
        P = hermite_functions(need, t, weighted=False)
        V = P[ab[:, 0]][:, :, None] * P[ab[:, 1]][:, None, :]
        W = np.outer(w, w)
        V = V.reshape(n, -1)
        return (V * W.ravel()) @ V.T
    # scaled-plane: evaluate the scaled functions at mapped nodes and undo the
    # Gaussian weight, so the rescaling itself is exercised
    N = spec.scale_N
    (L1, L2), (c1, c2) = spec.length, spec.center
    X = N**0.5 * (c1 + L1 * t)
    Y = N**1.5 * (c2 + L2 * t)
    pts = np.stack(np.broadcast_arrays(X[:, None], Y[None, :]), axis=-1)
    V = basis_values(spec, indices(spec, n), pts).reshape(n, -1)
    jac = N**0.5 * L1 * N**1.5 * L2
    W = (np.outer(w * np.exp(t * t), w * np.exp(t * t)) * jac).ravel()
    return (V * W) @ V.T


def gram_residual(spec: BasisSpec, n: int, nodes: int | None = None) -> float:
    """max_{i,j<=n} |<e_i, e_j> - delta_ij| under the module's quadrature."""
    G = gram_matrix(spec, n, nodes)
    return float(np.abs(G - np.eye(n)).max())
