"""Linear Boltzmann operator on a 2D velocity grid.

The operator is assembled from its Dirichlet form, so it is symmetric
and nonnegative by construction. Hard potentials give exponential decay;
soft potentials lose the spectral gap and decay polynomially. The last
table splits the form into low- and high-speed parts.
"""

import numpy as np

from kinetic_relax import boltzmann as bz
from kinetic_relax.analysis import fit_exponential
from kinetic_relax.experiments import boltzmann_initial

quad = bz.VelocityQuadrature()
rng = np.random.default_rng(4)

hard = bz.assemble_dirichlet_form(bz.CollisionKernelSpec(0.5, 0.5), quad, "biquadratic")
print(f"hard: min eig {hard.min_eigenvalue:.1e}, spectral gap {hard.spectral_gap():.3f}")
f0 = boltzmann_initial(rng, quad, 4)
tr, _ = bz.evolve_boltzmann(f0, hard, 8.0, 0.05, 4)
fit = fit_exponential(tr)
print(f"hard: decay rate {fit.rate:.3f} (R^2 = {fit.r_squared:.5f})")

soft = bz.assemble_dirichlet_form(bz.CollisionKernelSpec(-0.5, -0.5), quad, "biquadratic")
tr, _ = bz.evolve_boltzmann(f0, soft, 40.0, 0.05, 20, (-0.5, 0.5))
rep = bz.soft_decay_iteration(tr, 1.0, 3, 0.5, 4, -0.5)
print(f"soft: certified polynomial order {rep.order:.2f}, passed {rep.passed}")

print(f"{'eps':>6} {'C1':>8} {'C2':>8}")
for eps in (1.0, 0.5, 0.25, 0.125):
    s = bz.epsilon_split(hard, eps)
    print(f"{eps:6.3f} {s.C1:8.4f} {s.C2:8.4f}")
