"""Two polymer models with exact answers.

Chain: averaging the random-environment solution over the environment gives
the transition matrix exp(tK). Lattice: with all 2^n walks enumerated, the
mean partition function and the shift identity hold to rounding error.
"""
import numpy as np

from wickflow import polymers
from wickflow.rng import normals

model = polymers.ChainModel(polymers.random_generator(3, seed=4), 0, 1.0)
P = polymers.chain_transition_exact(model)
for y, est in enumerate(polymers.chain_mean_solution(model, 50_000, seed=5)):
    print(f"y={y}: MC {est.mean:.4f} +- {est.stderr:.4f}   exp(tK) {P[0, y]:.4f}")

lat = polymers.LatticeModel(6)
print("E_P Z - 1 =", polymers.lattice_mean_exact(lat) - 1)
print("Z at one field:", polymers.lattice_partition_exact(lat, normals(1, lat.n_sites)))
s = lat.site_index(2, 4)
print("shift identity for xi at (2, 4):", polymers.lattice_shift_identity_exact(lat, {(s,): 1.0}))
