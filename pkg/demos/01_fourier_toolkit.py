"""Fourier toolkit: exact free transport and the Bessel smoothing multiplier.

Free transport x -> x + v t acts on mode n as a phase, so it is an
isometry and a semigroup. The multiplier (1 - Laplacian)^(-s) damps high
modes and composes additively in s.
"""

import numpy as np

from kinetic_relax.spectral import advect, bessel_multiplier, l2_norm, to_spectrum

rng = np.random.default_rng(0)
N = 16
samples = rng.standard_normal(2 * N + 1)
f = to_spectrum(samples)
print(f"L2 norm from coefficients : {l2_norm(f):.12f}")
print(f"L2 norm from grid average : {np.sqrt(np.mean(samples**2)):.12f}")

v = np.array([0.37])
g = advect(f, v, 2.5)
h = advect(advect(f, v, 1.0), v, 1.5)
print(f"norm after transport      : {l2_norm(g):.12f}")
print(f"semigroup defect          : {np.max(np.abs(g.coeffs - h.coeffs)):.2e}")

for s in (0.0, 0.25, 0.5, 1.0):
    print(f"|(1-Lap)^(-{s:<4}) f|       : {l2_norm(bessel_multiplier(f, s)):.6f}")
