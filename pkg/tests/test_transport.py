import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinetic_relax import goldstein_taylor as gt
from kinetic_relax import transport as tp
from kinetic_relax.experiments import random_real_coeffs
from kinetic_relax.spectral import (
    KineticState,
    TorusSpectrum,
    VelocityGrid,
    advect,
    grid_points,
)

SMOOTH = gt.CrossSection(1, lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), name="cosine 1+0.5")


def random_state(cfg, seed=0, decay=1.0):
    rng = np.random.default_rng(seed)
    c = random_real_coeffs(rng, (cfg.vgrid.size,), cfg.dim, cfg.cutoff, decay)
    return KineticState(cfg.vgrid, cfg.dim, cfg.cutoff, c)


def constant_state(cfg, c=1.0):
    return KineticState.from_function(lambda x, v: c + 0 * x[0], cfg.vgrid, cfg.dim, cfg.cutoff)


def brute_samples(f, nx):
    """Per-node values on a uniform grid of nx points by direct summation."""
    n = f.cutoff
    k = np.arange(-n, n + 1)
    x = np.arange(nx) / nx
    return f.coeffs @ np.exp(2j * np.pi * np.outer(k, x))


@pytest.fixture(scope="module")
def weak_run():
    cfg = tp.TransportConfig.default(1, 16, 9, SMOOTH, 0.5)
    f0 = random_state(cfg, 3)
    return cfg, tp.simulate(f0, cfg, 1e-2, 200.0, 200)


def test_config_validation():
    with pytest.raises(ValueError):
        tp.TransportConfig(1, 4, VelocityGrid([0.0, 0.5], [0.5, 0.6]), gt.CrossSection.constant(1.0))
    with pytest.raises(ValueError):
        tp.TransportConfig.default(epsilon=-0.1)


def test_equilibrium_examples():
    cfg = tp.TransportConfig.default(1, 4, 8)
    assert tp.equilibrium(constant_state(cfg, 2.5)) == pytest.approx(2.5)
    odd = KineticState.from_function(lambda x, v: v[0] * np.cos(2 * np.pi * x[0]), cfg.vgrid, 1, 4)
    assert abs(tp.equilibrium(odd)) < 1e-16
    f = random_state(cfg, 1)
    vals = brute_samples(f, 64).real
    assert tp.equilibrium(f) == pytest.approx(float(cfg.vgrid.weights @ vals.mean(axis=1)), rel=1e-12)


def test_energy_examples():
    cfg = tp.TransportConfig.default(1, 4, 7)
    assert tp.energy(constant_state(cfg, 1.3), 1.3) == pytest.approx(0.0, abs=1e-28)
    f = KineticState.from_function(lambda x, v: 3 * np.cos(2 * np.pi * x[0]), cfg.vgrid, 1, 4)
    assert tp.energy(f, 0.0) == pytest.approx(9 / 2, rel=1e-13)
    g = random_state(cfg, 2)
    vals = brute_samples(g, 64)
    quad = float(cfg.vgrid.weights @ np.mean(np.abs(vals - tp.equilibrium(g)) ** 2, axis=1))
    assert tp.energy(g, tp.equilibrium(g)) == pytest.approx(quad, rel=1e-12)


def test_plain_zero_sigma_is_free_transport():
    cfg = tp.TransportConfig.default(1, 5, 5, gt.CrossSection.constant(0.0))
    f = random_state(cfg, 4)
    g = tp.step_plain(f, cfg, 0.3)
    for j, v in enumerate(cfg.vgrid.nodes):
        assert np.allclose(g.coeffs[j], advect(f.per_velocity[j], v, 0.3).coeffs)


def test_plain_constant_fixed_point():
    cfg = tp.TransportConfig.default(1, 4, 5, gt.CrossSection.cosine_bump())
    f = constant_state(cfg, 0.4)
    assert np.allclose(tp.step_plain(f, cfg, 0.1).coeffs, f.coeffs, atol=1e-15)


def test_plain_two_speed_matches_goldstein_taylor():
    n = 8
    vg = VelocityGrid(np.array([1.0, -1.0]), np.array([0.5, 0.5]))
    sig = gt.CrossSection(1, lambda x: 0.5 + 0.5 * np.cos(2 * np.pi * x))
    sig2 = gt.CrossSection(1, lambda x: 1.0 + np.cos(2 * np.pi * x))
    cfg = tp.TransportConfig(1, n, vg, sig2)
    rng = np.random.default_rng(5)
    c = random_real_coeffs(rng, (2,), 1, n, 1.0)
    s = gt.GTState(TorusSpectrum(1, n, c[0]), TorusSpectrum(1, n, c[1]))
    f = KineticState(vg, 1, n, c)
    for _ in range(50):
        s = gt.step(s, sig, 0.02)
        f = tp.step_plain(f, cfg, 0.02)
    assert np.allclose(f.coeffs[0], s.u.coeffs, atol=1e-13)
    assert np.allclose(f.coeffs[1], s.v.coeffs, atol=1e-13)


def test_plain_trace_invariants():
    cfg = tp.TransportConfig.default(1, 6, 7, gt.CrossSection.indicator(0.2, 0.7))
    f0 = random_state(cfg, 6)
    run = tp.simulate(f0, cfg, 0.02, 4.0, 1)
    assert np.all(np.diff(run.trace.values) <= 1e-12)
    assert abs(tp.equilibrium(run.final) - run.f_inf) < 1e-12


def test_weak_requires_damping():
    cfg = tp.TransportConfig.default(1, 4, 5, SMOOTH, 0.5)
    with pytest.raises(ValueError):
        tp.step_weak(random_state(cfg), cfg, 0.1)
    with pytest.raises(ValueError):
        tp.step_plain(random_state(cfg), cfg, 0.1)


def test_weak_small_epsilon_matches_plain():
    # sigma = 1, so sigma^2 = sigma and only the Bessel weight differs
    plain = tp.TransportConfig.default(1, 6, 7)
    weak = tp.TransportConfig.default(1, 6, 7, epsilon=1e-5)
    f0 = random_state(plain, 7)
    a = tp.simulate(f0, plain, 0.01, 1.0, 100).final
    b = tp.simulate(f0.with_coeffs(f0.coeffs), weak, 0.01, 1.0, 100).final
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-3


def test_weak_equilibrium_fixed_and_richardson():
    cfg = tp.TransportConfig.default(1, 6, 7, SMOOTH, 0.5)
    damp = tp.assemble_damping(cfg)
    c = constant_state(cfg, 0.9)
    assert np.allclose(tp.step_weak(c, cfg, 0.5, damp).coeffs, c.coeffs, atol=1e-14)
    f0 = random_state(cfg, 8)
    coarse = tp.simulate(f0, cfg, 1e-2, 1.0, 100, damp).final
    fine = tp.simulate(f0, cfg, 1e-2 / 16, 1.0, 1600, damp).final
    ref = tp.energy(fine, 0.0)
    assert math.sqrt(tp.energy(coarse.with_coeffs(coarse.coeffs - fine.coeffs), 0.0)) < 1e-4 * math.sqrt(ref)


def test_damping_matrix_structure():
    cfg = tp.TransportConfig.default(1, 8, 9, gt.CrossSection.raised_cosine(0.5), 0.5)
    d = tp.assemble_damping(cfg)
    assert np.max(np.abs(d.B - d.B.conj().T)) < 1e-14
    assert d.eigenvalues.min() > -1e-10
    # sigma = 1: B is the diagonal Bessel weight
    one = tp.assemble_damping(tp.TransportConfig.default(1, 4, 5, epsilon=0.7))
    k = np.arange(-4, 5)
    assert np.allclose(one.B, np.diag((1 + 4 * np.pi**2 * k**2) ** -0.7), atol=1e-14)


def test_weak_energy_balance():
    cfg = tp.TransportConfig.default(1, 8, 9, SMOOTH, 0.5)
    f0 = random_state(cfg, 9)
    tr = tp.simulate(f0, cfg, 5e-4, 1.0, 1).trace
    drop = tr.values[0] - tr.values[-1]
    assert abs(drop - 2 * np.trapezoid(tr.dissipation, tr.times)) <= 1e-6 * drop


def test_lhs_plain_examples():
    cfg = tp.TransportConfig.default(1, 4, 9, SMOOTH)
    assert tp.observability_lhs_plain(cfg, constant_state(cfg), 3.0) == pytest.approx(0.0, abs=1e-25)
    a = np.cos(3 * cfg.vgrid.nodes[:, 0]) + 0.2
    g = KineticState.from_function(lambda x, v: np.cos(3 * v[0]) + 0.2 + 0 * x[0], cfg.vgrid, 1, 4)
    w = cfg.vgrid.weights
    closed = 2.0 * 1.0 * float(w @ (a - w @ a) ** 2)
    assert tp.observability_lhs_plain(cfg, g, 2.0) == pytest.approx(closed, rel=1e-12)


def test_lhs_plain_cosine_converges_to_asymptote():
    cfg = tp.TransportConfig.default(1, 4, 9)
    g = KineticState.from_function(lambda x, v: np.cos(2 * np.pi * x[0]), cfg.vgrid, 1, 4)
    w = cfg.vgrid.weights
    # |A_1|^2 = |A_-1|^2 = 1/4 at every node
    asym = 2 * 0.25 * float(np.sum(w - w**2))
    errs = [abs(tp.observability_lhs_plain(cfg, g, T) / T - asym) / asym for T in (4, 8, 16)]
    assert max(errs) < 0.05
    # node spacing 1/9: every cross-velocity phase closes at T = 9
    assert tp.observability_lhs_plain(cfg, g, 9.0) / 9.0 == pytest.approx(asym, rel=1e-10)
    assert tp.asymptotic_observability(cfg, g) == pytest.approx(asym, rel=1e-14)


def test_observability_report_examples():
    cfg = tp.TransportConfig.default(1, 8, 9)
    f = random_state(cfg, 10)
    for T in (8.0, 16.0):
        c = tp.observability_report_plain(cfg, f, T)
        assert 0.4 <= c <= 1.0
    with pytest.raises(ValueError):
        tp.observability_report_plain(cfg, constant_state(cfg), 4.0)
    bump = tp.TransportConfig.default(1, 8, 9, gt.CrossSection.indicator(0.0, 0.3))
    assert tp.observability_report_plain(bump, f, 8.0) > 0


def test_lhs_weak_examples():
    cfg = tp.TransportConfig.default(1, 4, 9, epsilon=0.5)
    assert tp.observability_lhs_weak(cfg, constant_state(cfg), 2.0) == pytest.approx(0.0, abs=1e-25)
    g = KineticState.from_function(lambda x, v: (1 + v[0]) * np.cos(4 * np.pi * x[0]), cfg.vgrid, 1, 4)
    plain = tp.TransportConfig.default(1, 4, 9)
    weight = (1 + 16 * np.pi**2) ** -0.5
    ratio = tp.observability_lhs_weak(cfg, g, 4.0) / tp.observability_lhs_plain(plain, g, 4.0)
    assert ratio == pytest.approx(weight, rel=1e-12)
    rnd = random_state(cfg, 11)
    scfg = tp.TransportConfig.default(1, 4, 9, SMOOTH, 0.5)
    lhs = tp.observability_lhs_weak(scfg, rnd, 8.0)
    weighted = tp.sobolev_energy(rnd, tp.equilibrium(rnd), -0.5)
    assert lhs / (8.0 * weighted) > 0


def test_sobolev_growth_examples():
    cfg = tp.TransportConfig.default(1, 6, 7, SMOOTH, 0.5)
    eq = tp.simulate(constant_state(cfg), cfg, 0.1, 2.0, 2)
    slope, ok = tp.sobolev_growth_check(eq)
    assert slope == pytest.approx(0.0, abs=1e-14) and ok
    free = tp.TransportConfig.default(1, 6, 7, gt.CrossSection.constant(0.0), 0.5)
    run = tp.simulate(random_state(free, 12), free, 0.1, 5.0, 5)
    h = run.trace.extra["h_eps"]
    assert np.ptp(h) < 1e-12 * h[0]
    assert tp.sobolev_growth_check(run)[1]


def test_jensen_iteration(weak_run):
    cfg, run = weak_run
    tr = run.trace
    assert tp.sobolev_growth_check(run)[1]
    reports = []
    for k1, k2, k3 in ((4, 0.4, 11), (4, 0.49, 9)):
        M = [tp.weighted_moment(s, run.f_inf, k2) for s in run.states]
        rep = tp.jensen_iteration(tr.values, M, 2.0, k1, k2, k3, 0.5)
        assert rep.passed, rep.message
        assert rep.C > 0 and rep.order == pytest.approx(k1 / k3)
        reports.append(rep)
    assert reports[1].order > reports[0].order
    # polynomial envelope fitted on the first half bounds the second half
    for rep in reports:
        t, h = tr.times, tr.values
        first = (t > 0) & (t <= 100)
        c = np.max(h[first] * (t[first] + 1) ** rep.order)
        assert np.all(h[t > 100] <= c * (t[t > 100] + 1) ** -rep.order)


def test_jensen_edge_cases():
    z = np.zeros(5)
    assert tp.jensen_iteration(z, z, 1.0, 4, 0.4, 11, 0.5).passed
    with pytest.raises(ValueError):
        tp.jensen_iteration(np.ones(5), np.ones(5), 1.0, 4, 0.45, 5, 0.5)
    with pytest.raises(ValueError):
        tp.jensen_iteration(np.ones(5), np.ones(5), 1.0, 1, 0.6, 11, 0.5)
    rising = np.array([1.0, 0.5, 0.6, 0.2])
    assert not tp.jensen_iteration(rising, np.ones(4), 1.0, 4, 0.4, 11, 0.5).passed


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2.0), st.floats(0.1, 3.0))
def test_free_transport_preserves_mode_magnitudes(seed, sigma, t):
    cfg = tp.TransportConfig.default(1, 5, 5, gt.CrossSection.constant(0.0))
    f = random_state(cfg, seed)
    g = tp.step_plain(f, cfg, t)
    assert np.allclose(np.abs(g.coeffs), np.abs(f.coeffs), rtol=0, atol=1e-12)
    damped = tp.TransportConfig.default(1, 5, 5, gt.CrossSection.constant(sigma))
    h = tp.step_plain(f, damped, t)
    assert tp.energy(h, tp.equilibrium(f)) <= tp.energy(f, tp.equilibrium(f)) + 1e-12
    assert abs(tp.equilibrium(h) - tp.equilibrium(f)) < 1e-12
