"""Intersection local time through basis truncation.

alpha_n = sum_{j<=n} m_j m'_j approximates the mutual intersection local time.
For two halves of a planar motion the mean is log 2 / pi; for the graphs of
two 1D bridges the moments are known exactly, but the Hermite truncation
converges slowly there because the occupation density is singular at the
pinned ends.
"""
import math

from wickflow import milt, paths, she, shifts

spec = she.default_planar_basis((0.0, 0.0), 1.0)
for n in (64, 128, 256):
    est = milt.cross_alpha_mc(1.0, 2.0, n, 5000, seed=n, basis=spec, steps=1024)
    print(f"planar motions n={n:3d}: {est.mean:.4f} +- {est.stderr:.4f}  exact {math.log(2) / math.pi:.4f}")

for n in (64, 256):
    law = paths.PathLaw("bridge", 1, t=1.0, steps=2048)
    shift = shifts.PathShift(law, she.default_spacetime_basis(0.0, 1.0), spacetime=True)
    m1, m2 = milt.moments(shifts.pair_alphas(shift, n, 4000, seed=n), (1, 2), n, n)
    print(f"1+1 bridges n={n:3d}: E a = {m1.mean:.3f} (exact {milt.bridge_1p1_moment_exact(1, 1):.3f}), "
          f"E a^2 = {m2.mean:.3f} (exact 1)")

print("phi_norm_sq(0, 1) =", milt.phi_norm_sq(0.0, 1.0), " 1/2pi =", 1 / (2 * math.pi))
