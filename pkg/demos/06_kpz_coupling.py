"""Rescaled planar bridges converge to the graph of a 1D bridge.

Time runs as r + b(r)/N, so the planar coordinates m_{N,j} approach the
space-time coordinates m_j as N grows. The scaling factor grows like
exp(N^2/2) and is only ever reported as a logarithm.
"""
from wickflow import she

for row in she.kpz_coupling_experiment([2, 4, 8, 16, 32, 64], 16, 1000, seed=3):
    print(f"N={row.N:5.0f}  d(N)={row.d:.5f}  log Z={row.log_Z:+.4f}  log factor={row.log_scale:.1f}")

rows = she.alpha_variance_convergence([0.5, 0.2, 0.1], 0.0, 2000, seed=4, n=128, steps=512)
for r in rows:
    print(f"nu={r.nu}: E alpha^2 = {r.estimate.mean:.3f} +- {r.estimate.stderr:.3f}")
