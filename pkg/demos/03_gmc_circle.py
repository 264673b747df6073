"""Gaussian multiplicative chaos on the circle.

With m_{2k-1} + i m_{2k} = gamma e^{ikw} / sqrt(k/2) the inner product of two
independent draws tends to -2 gamma^2 log|2 sin((w - w')/2)|, and
E exp(alpha) has the closed form Gamma(1 - 2g^2) / Gamma(1 - g^2)^2.
"""
import numpy as np

from wickflow import shifts
from wickflow.estimate import MCEstimate

for g in (0.2, 0.4, 0.5):
    closed = shifts.circle_intersection_exponential(g)
    quad = shifts.circle_intersection_quadrature(g)
    vals = np.exp(shifts.pair_alphas(shifts.CircleGMC(g), 2048, 50_000, seed=11))
    est = MCEstimate.from_samples(vals, 2048, 11)
    print(f"gamma={g}: closed {closed:.10f}  quadrature {quad:.10f}  MC {est.mean:.4f} +- {est.stderr:.4f}")
