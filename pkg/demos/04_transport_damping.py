"""Linear relaxation on the torus: full damping, then weak damping.

With a discrete velocity grid the observability integral grows linearly
in T with a slope fixed by mode-by-mode velocity variance. Weakening the
damping by (1 - Laplacian)^(-eps) turns exponential decay into a
polynomial rate, which the Jensen iteration certifies.
"""

import numpy as np

from kinetic_relax import goldstein_taylor as gt
from kinetic_relax import transport as tp
from kinetic_relax.analysis import fit_exponential, fit_polynomial
from kinetic_relax.experiments import random_real_coeffs
from kinetic_relax.spectral import KineticState

rng = np.random.default_rng(3)
cfg = tp.TransportConfig.default(1, 8, 9)
f0 = KineticState(cfg.vgrid, 1, 8, random_real_coeffs(rng, (9,), 1, 8, 1.0))
asym = tp.asymptotic_observability(cfg, f0)
for T in (4.0, 9.0, 16.0):
    lhs = tp.observability_lhs_plain(cfg, f0, T)
    print(f"T={T:4.0f}: lhs/T {lhs / T:.6f}  asymptote {asym:.6f}")
run = tp.simulate(f0, cfg, 1e-2, 20.0, 10)
print(f"full damping: exponential rate {fit_exponential(run.trace).rate:.3f}")

sigma = gt.CrossSection(1, lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), name="cosine")
wcfg = tp.TransportConfig.default(1, 16, 9, sigma, 0.5)
g0 = KineticState(wcfg.vgrid, 1, 16, random_real_coeffs(rng, (9,), 1, 16, 1.0))
weak = tp.simulate(g0, wcfg, 1e-2, 200.0, 200)
M = [tp.weighted_moment(s, weak.f_inf, 0.4) for s in weak.states]
rep = tp.jensen_iteration(weak.trace.values, M, 2.0, 4, 0.4, 11, 0.5)
tail = fit_polynomial(weak.trace, (100.0, 200.0))
print(f"weak damping: Jensen {rep.message}, certified order {rep.order:.3f}, "
      f"observed tail slope {-tail.rate:.2f}")
