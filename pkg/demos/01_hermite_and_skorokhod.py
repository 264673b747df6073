"""Skorokhod integrals in finitely many Gaussian coordinates.

Integrating the constant 1 again and again gives the Hermite polynomials,
and the adjoint identity E[S(G) F] = E[G . grad F] holds for smooth F.
"""
import numpy as np

from wickflow import skorokhod as S

grid = np.linspace(-2, 2, 5)
for k in range(5):
    print(f"k={k}  iterate: {S.iterate_integral(k, grid)}  He_k: {S.hermite(k, grid)}")

# the beta-recursion X_k = X_{k-1} + beta S(X_{k-1}) is a shifted, scaled Hermite
beta = 0.5
print("beta-recursion at k=4:", S.wick_recursion(beta, 4, grid))
print("beta^4 He_4(1/beta + x):", beta**4 * S.hermite(4, 1 / beta + grid))

# adjoint identity for a rotation-like field in two coordinates
G = S.Integrand(2, lambda x: np.stack([x[..., 1], -x[..., 0]], -1), lambda x: np.zeros_like(x))
est = S.adjoint_residual(G, lambda x: np.sin(x[..., 0] + 2 * x[..., 1]),
                         lambda x: np.cos(x[..., 0] + 2 * x[..., 1])[..., None] * np.array([1.0, 2.0]),
                         200_000, seed=1)
print(f"E[S(G)F] - E[G.gradF] = {est.mean:.5f} +- {est.stderr:.5f}")
