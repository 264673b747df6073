"""Partition functions built from random shifts have mean one.

Z_n = E_Q exp(sum m_j xi_j - |m|^2 / 2) where m are basis coordinates of a
Brownian bridge occupation measure. Averaging over the noise xi gives 1 for
every n, while a single noise draw gives a random positive value.
"""
import numpy as np

from wickflow import paths, she, shifts
from wickflow.rng import normals

t = 0.5
law = paths.PathLaw("bridge", 2, t=t, steps=512)
shift = shifts.PathShift(law, she.default_planar_basis((0.0, 0.0), t))

for n in (4, 16, 32):
    r = shifts.mean_one_residual(shift, n, 20_000, 100, seed=n)
    z = shifts.partition_Zn(shift, normals(7, n), 2000, seed=8)
    print(f"n={n:3d}  E_P Z_n - 1 = {r.mean:+.4f} +- {r.stderr:.4f}   Z_n(one draw) = {z.mean:.3f}")

# second moments: nested pools versus independent pairs
a, b = shifts.second_moment(shift, 16, 5000, seed=3)
print(f"E Z_16^2: nested {a.mean:.4f} +- {a.stderr:.4f}, paired {b.mean:.4f} +- {b.stderr:.4f}")
