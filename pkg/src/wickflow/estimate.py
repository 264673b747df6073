"""Monte Carlo estimates and deterministic block-parallel reduction."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .rng import derive_seed

_DEFAULT_WORKERS = 1


@dataclass(frozen=True)
class MCEstimate:
    """Mean and standard error of a scalar Monte Carlo functional."""

    mean: float
    stderr: float
    reps: int
    n: int
    seed: int
    label: str = ""

    def z(self, oracle: float) -> float:
        """Standardized distance of the mean from an oracle value."""
        d = self.mean - oracle
        if self.stderr == 0.0:
            return 0.0 if d == 0.0 else math.copysign(math.inf, d)
        return d / self.stderr

    def within(self, oracle: float, k: float = 4.0) -> bool:
        return abs(self.z(oracle)) <= k

    @classmethod
    def from_samples(cls, values, n: int, seed: int, label: str = "") -> "MCEstimate":
        """Sample mean and stderr with compensated sums, so the result does not
        depend on how the values were produced or grouped."""
        v = np.asarray(values, dtype=float).ravel()
        if v.size < 2:
            raise ValueError("need at least two replicas")
        mean = math.fsum(v) / v.size
        var = math.fsum((v - mean) ** 2) / (v.size - 1)
        return cls(mean, math.sqrt(var / v.size), int(v.size), n, seed, label)


def combined_z(a: MCEstimate, b: MCEstimate) -> float:
    """z-score of the difference of two independent estimates."""
    s = math.hypot(a.stderr, b.stderr)
    d = a.mean - b.mean
    if s == 0.0:
        return 0.0 if d == 0.0 else math.copysign(math.inf, d)
    return d / s


def default_workers() -> int:
    return _DEFAULT_WORKERS


def set_default_workers(workers) -> None:
    global _DEFAULT_WORKERS
    _DEFAULT_WORKERS = resolve_workers(workers)


def resolve_workers(workers=None) -> int:
    """Worker count from an int, "auto", or None (falls back to the
    WICKFLOW_WORKERS environment variable, then to the process default)."""
    if workers is None:
        env = os.environ.get("WICKFLOW_WORKERS")
        if env is None:
            return _DEFAULT_WORKERS
        workers = env
    if isinstance(workers, str):
        if workers == "auto":
            return os.cpu_count() or 1
        workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return int(workers)


def block_sizes(reps: int, block: int) -> list[int]:
    """Split ``reps`` into fixed blocks; the split never depends on workers."""
    if reps < 1:
        raise ValueError("reps must be positive")
    full, rest = divmod(reps, block)
    return [block] * full + ([rest] if rest else [])


def _call(task):
    fn, args = task
    return fn(*args)


def block_map(fn: Callable, seed: int, sizes: Sequence[int], workers=None) -> list:
    """Evaluate ``fn(block_seed, size)`` for every block, in block order.

    Block ``b`` always receives ``derive_seed(seed, b)`` whatever the worker
    count, and results come back in block order, so any reduction done by the
    caller is identical for 1 or many workers.
    """
    tasks = [(fn, (derive_seed(seed, b), size)) for b, size in enumerate(sizes)]
    w = min(resolve_workers(workers), len(tasks))
    if w <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(_call, tasks))


def concat(parts: Iterable) -> np.ndarray:
    return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])
