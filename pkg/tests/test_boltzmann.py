import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinetic_relax import boltzmann as bz
from kinetic_relax.experiments import boltzmann_initial
from kinetic_relax.spectral import KineticState

HARD = bz.CollisionKernelSpec(0.5, 0.5)
SOFT = bz.CollisionKernelSpec(-0.5, -0.5)


def homogeneous(quad, vec, cutoff=1):
    c = np.zeros((quad.size,) + (2 * cutoff + 1,) * 2, dtype=complex)
    c[:, cutoff, cutoff] = vec
    return KineticState(quad.velocity_grid(), 2, cutoff, c)


def brute_dirichlet(spec, quad, f):
    """Triple loop over (v_j, v_k, omega) with an inline bilinear interpolant."""
    V, mu, h, n = quad.nodes, quad.mu, quad.h, quad.n_axis
    g = (f / np.sqrt(mu)).reshape(n, n)

    def interp(p):
        idx = (p + quad.vmax - 0.5 * h) / h
        if np.any(idx < -1e-12) or np.any(idx > n - 1 + 1e-12):
            return None
        i0 = np.clip(np.floor(idx).astype(int), 0, n - 2)
        t = idx - i0
        return ((1 - t[0]) * (1 - t[1]) * g[i0[0], i0[1]] + t[0] * (1 - t[1]) * g[i0[0] + 1, i0[1]]
                + (1 - t[0]) * t[1] * g[i0[0], i0[1] + 1] + t[0] * t[1] * g[i0[0] + 1, i0[1] + 1])

    total = 0.0
    for j in range(quad.size):
        for k in range(quad.size):
            d = V[k] - V[j]
            r = np.linalg.norm(d)
            for om in quad.omegas:
                if r == 0 or abs(d @ om / r) <= 1e-12:
                    continue
                p = d @ om
                a, b = interp(V[j] + p * om), interp(V[k] - p * om)
                if a is None or b is None:
                    continue
                c = h**4 * quad.d_omega * spec.evaluate(r, d @ om / r) * mu[j] * mu[k]
                total += 0.25 * c * (a + b - g.ravel()[j] - g.ravel()[k]) ** 2
    return total


@pytest.fixture(scope="module")
def small_quad():
    return bz.VelocityQuadrature(2.0, 0.5, 6)


def test_maxwellian_examples():
    assert bz.maxwellian(np.zeros(2)) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    v = np.array([[0.3, -1.2], [2.0, 0.1]])
    assert np.allclose(bz.maxwellian(v), bz.maxwellian(-v))
    q = bz.VelocityQuadrature(6.0, 0.25)
    assert abs(q.mass - 1.0) < 1e-3
    p = bz.MaxwellianParams(2.0, (0.5, 0.0), 1.5)
    assert bz.maxwellian(np.array([0.5, 0.0]), p) == pytest.approx(2.0 / (3 * math.pi))
    with pytest.raises(ValueError):
        bz.MaxwellianParams(rho=-1.0)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        bz.CollisionKernelSpec(-1.5, -0.5)
    with pytest.raises(ValueError):
        bz.CollisionKernelSpec(0.0, 1.0)


def test_quadrature_invariants(quad):
    assert 0.999 <= quad.mass <= 1.001
    assert quad.is_symmetric()
    assert quad.size == 576


def test_collision_frequency_examples(quad):
    nu, _ = bz.collision_frequency(bz.CollisionKernelSpec(0.0, 0.0), quad)
    assert np.allclose(nu, 2 * math.pi * quad.mass, rtol=1e-12)
    assert np.allclose(nu, 2 * math.pi, rtol=1e-3)
    nu, m1 = bz.collision_frequency(HARD, quad)
    inner = quad.speed < 3.5
    order = np.argsort(quad.speed[inner])
    # nodes of equal speed differ only by angular-quadrature anisotropy
    assert np.all(np.diff(nu[inner][order]) > -1e-5 * nu.max())
    assert m1 > 0
    nu, m1 = bz.collision_frequency(SOFT, quad)
    assert np.all(np.isfinite(nu)) and m1 > 0


def test_check_B2_examples(quad):
    assert bz.check_B2(HARD, quad)
    doubled = bz.CollisionKernelSpec(0.5, 0.5, kernel=lambda r, c: 2 * r**0.5)
    assert not bz.check_B2(doubled, quad, M2=1.0)
    ang = bz.CollisionKernelSpec(0.5, 0.5, M2=2.0, kernel=bz.angular_kernel(0.5))
    assert bz.check_B2(ang, quad)
    # grid-max oracle: B / |v - v*|^beta peaks at 1 + |cos| <= 2
    r = np.linspace(0.1, 5, 50)
    c = np.linspace(-1, 1, 41)
    ratio = bz.angular_kernel(0.5)(r[:, None], c[None, :]) / r[:, None] ** 0.5
    assert ratio.max() == pytest.approx(2.0)


def test_form_matches_brute_force(small_quad, rng):
    op = bz.assemble_dirichlet_form(HARD, small_quad)
    for _ in range(3):
        f = rng.standard_normal(small_quad.size)
        assert op.dirichlet(f) == pytest.approx(brute_dirichlet(HARD, small_quad, f), rel=1e-12)


def test_form_structure(hard_bilinear, quad, rng):
    op = hard_bilinear
    assert np.array_equal(op.Q, op.Q.T)
    assert op.min_eigenvalue >= -1e-10
    assert op.dropped_fraction < 1e-3
    f = rng.standard_normal((quad.size, 5))
    assert np.all(op.dirichlet(f) >= 0)
    single = np.zeros(quad.size)
    single[200] = 1.0
    assert op.dirichlet(single) > 0
    # <-L f, f>_h = D(f), L self-adjoint
    L = op.L
    g = rng.standard_normal(quad.size)
    assert quad.weight * (-L @ g) @ g == pytest.approx(op.dirichlet(g), rel=1e-12)
    assert np.max(np.abs(L - L.T)) <= 1e-12 * np.max(np.abs(L))


def test_invariants_near_kernel(hard_bilinear, hard_biquadratic, quad, rng):
    phi = bz.kernel_basis(quad)
    generic = np.median([hard_bilinear.rayleigh(bz.kernel_projection(rng.standard_normal(quad.size),
                                                                          quad)) for _ in range(5)])
    for i in range(4):
        assert hard_bilinear.rayleigh(phi[:, i]) < 1e-2 * generic
        assert hard_biquadratic.rayleigh(phi[:, i]) < 1e-10 * generic


def test_kernel_projection_examples(quad, rng):
    s = np.sqrt(quad.mu)
    assert np.max(np.abs(bz.kernel_projection(s, quad))) < 1e-14
    f = bz.kernel_projection(rng.standard_normal(quad.size), quad)
    assert np.allclose(bz.kernel_projection(f, quad), f, atol=1e-14)
    V = quad.nodes
    for mom in (s, V[:, 0] * s, V[:, 1] * s, quad.speed**2 * s):
        assert abs(np.sum(quad.h**2 * mom * f)) < 1e-12
    st = boltzmann_initial(rng, quad, 2, project=True)
    assert np.max(np.abs(bz.invariant_moments(st, quad))) < 1e-12


def test_evolve_zero_and_warning(hard_biquadratic, quad, rng):
    zero = homogeneous(quad, np.zeros(quad.size))
    tr, _ = bz.evolve_boltzmann(zero, hard_biquadratic, 0.5, 0.05)
    assert np.all(tr.values == 0)
    raw = homogeneous(quad, np.sqrt(quad.mu) + 0.1 * rng.standard_normal(quad.size))
    with pytest.warns(RuntimeWarning):
        tr, _ = bz.evolve_boltzmann(raw, hard_biquadratic, 0.2, 0.05)
    assert tr.values[0] < 0.1**2 * 2 * quad.size * quad.weight


def test_homogeneous_decay_matches_eigen_oracle(hard_biquadratic, quad, rng):
    op = hard_biquadratic
    f = bz.kernel_projection(rng.standard_normal(quad.size), quad)
    tr, _ = bz.evolve_boltzmann(homogeneous(quad, f), op, 1.0, 0.1)
    lam, U = np.linalg.eigh(-op.L)
    y = U.T @ f
    exact = [quad.weight * np.sum(np.exp(-2 * np.clip(lam, 0, None) * t) * y**2) for t in tr.times]
    assert np.allclose(tr.values, exact, rtol=1e-10)
    gap = op.spectral_gap()
    assert np.all(tr.values <= tr.values[0] * np.exp(-2 * gap * tr.times) * (1 + 1e-10))


def test_energy_balance_and_monotone(hard_biquadratic, quad, rng):
    f0 = boltzmann_initial(rng, quad, 1)
    tr, _ = bz.evolve_boltzmann(f0, hard_biquadratic, 1.0, 0.05)
    assert np.all(np.diff(tr.values) <= 1e-14)
    drop = tr.values[0] - tr.values
    assert np.max(np.abs(drop - tr.extra["dissipated"])) <= 1e-12 * tr.values[0]
    fine, _ = bz.evolve_boltzmann(f0, hard_biquadratic, 0.5, 2e-3)
    quadrature = 2 * np.trapezoid(fine.dissipation, fine.times)
    assert abs(fine.values[0] - fine.values[-1] - quadrature) <= 1e-3 * fine.values[0]


def test_observability_examples(hard_bilinear, quad, rng):
    op = hard_bilinear
    zero = homogeneous(quad, np.zeros(quad.size))
    with pytest.raises(ValueError):
        bz.observability_lhs_boltzmann(op, zero, 2.0)
    f = bz.kernel_projection(rng.standard_normal(quad.size), quad)
    lhs, _ = bz.observability_lhs_boltzmann(op, homogeneous(quad, f), 3.0)
    assert lhs == pytest.approx(3.0 * op.dirichlet(f), rel=1e-12)
    c = np.zeros((quad.size, 3, 3), dtype=complex)
    a = bz.kernel_projection(rng.standard_normal(quad.size), quad)
    c[:, 2, 1] = a
    c[:, 0, 1] = a
    mode = KineticState(quad.velocity_grid(), 2, 1, c)
    per_T = []
    for T in (4.0, 8.0, 16.0):
        lhs, cemp = bz.observability_lhs_boltzmann(op, mode, T)
        assert cemp > 0
        per_T.append(lhs / T)
    assert abs(per_T[2] - per_T[1]) < abs(per_T[1] - per_T[0]) + 1e-3 * per_T[2]
    assert abs(per_T[2] / per_T[1] - 1) < 0.15


def test_observability_exact_vs_trapezoid(small_quad, rng):
    op = bz.assemble_dirichlet_form(HARD, small_quad)
    c = np.zeros((small_quad.size, 3, 3), dtype=complex)
    a = bz.kernel_projection(rng.standard_normal(small_quad.size), small_quad)
    c[:, 2, 1] = c[:, 0, 1] = a
    c[:, 1, 2] = c[:, 1, 0] = 0.5 * a
    mode = KineticState(small_quad.velocity_grid(), 2, 1, c)
    exact, _ = bz.observability_lhs_boltzmann(op, mode, 4.0)
    trap, _ = bz.observability_lhs_boltzmann(op, mode, 4.0, nt=4001)
    assert trap == pytest.approx(exact, rel=1e-5)


def test_observability_sweep(hard_biquadratic, quad):
    rng = np.random.default_rng(20)
    for _ in range(20):
        _, cemp = bz.observability_lhs_boltzmann(hard_biquadratic, boltzmann_initial(rng, quad, 1), 8.0)
        assert cemp > 0


def test_epsilon_split(hard_bilinear):
    big = bz.epsilon_split(hard_bilinear, 10.0)
    assert big.C1 < 1e-10
    assert np.allclose(big.Q2, hard_bilinear.Q)
    rows = [bz.epsilon_split(hard_bilinear, e) for e in (1.0, 0.5, 0.25, 0.125)]
    for r in rows:
        assert r.split_error < 1e-12
    c2 = [r.C2 for r in rows]
    assert all(b <= a * 1.05 for a, b in zip(c2, c2[1:]))
    assert c2[-1] < c2[0]


def test_soft_iteration_short_run(soft_biquadratic, quad):
    rng = np.random.default_rng(21)
    f0 = boltzmann_initial(rng, quad, 1)
    tr, _ = bz.evolve_boltzmann(f0, soft_biquadratic, 20.0, 0.05, 20, (-0.5, 0.5))
    rep = bz.soft_decay_iteration(tr, 1.0, 3, 0.5, 4, -0.5)
    assert rep.holder_ok and rep.growth_ok
    assert rep.order == pytest.approx(0.75)
    with pytest.raises(ValueError):
        bz.soft_decay_iteration(tr, 1.0, 3, 0.2, 4, -0.5)


def test_soft_iteration_equilibrium():
    t = np.arange(6.0)
    from kinetic_relax.analysis import EnergyTrace
    tr = EnergyTrace(t, np.zeros(6))
    assert bz.soft_decay_iteration(tr, 1.0, 3, 0.5, 4, -0.5).passed


@given(st.integers(0, 2**32 - 1))
def test_projection_idempotent_property(seed):
    q = bz.VelocityQuadrature(3.0, 0.5, 4)
    f = np.random.default_rng(seed).standard_normal((q.size, 3))
    p = bz.kernel_projection(f, q)
    assert np.allclose(bz.kernel_projection(p, q), p, atol=1e-12)
    assert np.max(np.abs(bz.invariant_moments(p, q))) < 1e-12
