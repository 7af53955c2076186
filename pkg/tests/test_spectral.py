import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinetic_relax.spectral import (
    KineticState,
    TorusSpectrum,
    VelocityGrid,
    advect,
    bessel_multiplier,
    grid_points,
    l2_norm,
    multiply,
    to_spectrum,
    uniform_velocity_grid,
    velocity_average,
)

from conftest import real_field


def naive_dft(samples):
    """O(M^2) coefficient sum, independent of numpy.fft."""
    m = samples.size
    n = (m - 1) // 2
    x = np.arange(m) / m
    return np.array([np.sum(samples * np.exp(-2j * np.pi * k * x)) / m
                     for k in range(-n, n + 1)])


def naive_eval(coeffs, x):
    n = (coeffs.size - 1) // 2
    k = np.arange(-n, n + 1)
    return np.exp(2j * np.pi * np.outer(x, k)) @ coeffs


def test_constant_field():
    s = to_spectrum(np.ones(9))
    expected = np.zeros(9)
    expected[4] = 1.0
    assert np.allclose(s.coeffs, expected, atol=1e-15)


def test_cosine_coefficients():
    s = TorusSpectrum.from_function(lambda x: np.cos(2 * np.pi * x), 1, 5)
    assert s.mode(1) == pytest.approx(0.5, abs=1e-15)
    assert s.mode(-1) == pytest.approx(0.5, abs=1e-15)
    others = np.delete(s.coeffs, [4, 6])
    assert np.max(np.abs(others)) < 1e-15


def test_round_trip_against_direct_dft(rng):
    samples = rng.standard_normal(17)
    s = to_spectrum(samples)
    assert np.allclose(s.coeffs, naive_dft(samples), atol=1e-13)
    back = naive_eval(s.coeffs, np.arange(17) / 17).real
    assert np.max(np.abs(back - samples)) <= 1e-10 * np.max(np.abs(samples))


def test_size_mismatch_rejected():
    with pytest.raises(ValueError):
        to_spectrum(np.ones(10))
    with pytest.raises(ValueError):
        to_spectrum(np.ones(9), cutoff=3)


def test_real_conjugacy(rng):
    s = real_field(rng, 2, 4)
    assert s.is_real()
    assert not TorusSpectrum(1, 1, np.array([0, 0, 1j])).is_real()


def test_advect_identities(rng):
    s = real_field(rng, 1, 6)
    assert np.allclose(advect(s, [0.7], 0.0).coeffs, s.coeffs)
    assert np.allclose(advect(s, [0.0], 3.1).coeffs, s.coeffs)


def test_advect_quarter_shift_pointwise():
    s = TorusSpectrum.from_function(lambda x: np.cos(2 * np.pi * x), 1, 4)
    moved = advect(s, [1.0], 0.25)
    x = grid_points(1, 4)[0]
    oracle = to_spectrum(np.cos(2 * np.pi * (x - 0.25)))
    assert np.allclose(moved.coeffs, oracle.coeffs, atol=1e-14)
    sine = TorusSpectrum.from_function(lambda x: np.sin(2 * np.pi * x), 1, 4)
    assert np.allclose(moved.coeffs, sine.coeffs, atol=1e-14)


def test_advect_offgrid_shift_matches_pointwise_evaluation(rng):
    s = real_field(rng, 1, 5)
    v, t = 0.37, 1.3
    x = rng.uniform(0, 1, 20)
    moved = naive_eval(advect(s, [v], t).coeffs, x)
    direct = naive_eval(s.coeffs, x - v * t)
    assert np.allclose(moved, direct, atol=1e-12)


def test_bessel_multiplier_values():
    s = TorusSpectrum.from_function(lambda x: 1 + np.cos(2 * np.pi * x), 1, 3)
    assert np.allclose(bessel_multiplier(s, 0.0).coeffs, s.coeffs)
    b = bessel_multiplier(s, 1.0)
    assert b.mode(0) == pytest.approx(1.0)
    # 1/sqrt(1 + 4 pi^2), frozen from a 30-digit mpmath evaluation
    assert b.mode(1) / s.mode(1) == pytest.approx(0.15717672547758985, rel=1e-14)


def test_l2_norm_examples():
    assert l2_norm(TorusSpectrum.zeros(2, 3)) == 0.0
    s = TorusSpectrum.from_function(lambda x: np.cos(2 * np.pi * x), 1, 4)
    x = np.arange(4096) / 4096
    quad = math.sqrt(np.mean(np.cos(2 * np.pi * x) ** 2))
    assert l2_norm(s) == pytest.approx(quad, rel=1e-12)
    assert l2_norm(s) == pytest.approx(1 / math.sqrt(2), rel=1e-14)


def test_multiply_dealiased():
    a = TorusSpectrum.from_function(lambda x: np.cos(2 * np.pi * x), 1, 2)
    p = multiply(a, a)
    # cos^2 = 1/2 + cos(4 pi x)/2 fits inside cutoff 2 exactly
    assert p.mode(0) == pytest.approx(0.5)
    assert p.mode(2) == pytest.approx(0.25)


def test_velocity_average_examples(rng):
    vg = uniform_velocity_grid(6)
    assert vg.measure == pytest.approx(1.0, abs=1e-12)
    g = real_field(rng, 1, 4)
    f = KineticState.from_spectra(vg, [g] * vg.size)
    assert np.allclose(velocity_average(f).coeffs, g.coeffs)
    odd = KineticState.from_spectra(vg, [g * v for v in vg.nodes[:, 0]])
    assert np.max(np.abs(velocity_average(odd).coeffs)) < 1e-15
    c = rng.standard_normal((vg.size, 9)) + 1j * rng.standard_normal((vg.size, 9))
    f = KineticState(vg, 1, 4, c)
    direct = sum(vg.weights[j] * c[j] for j in range(vg.size))
    assert np.allclose(velocity_average(f).coeffs, direct, atol=1e-15)


def test_velocity_grid_validation():
    with pytest.raises(ValueError):
        VelocityGrid(np.array([0.0, 0.7]), np.array([0.5, 0.5]), ([-0.5], [0.5]))
    with pytest.raises(ValueError):
        VelocityGrid(np.array([0.0]), np.array([-1.0]))


def test_kinetic_state_shared_cutoff():
    vg = uniform_velocity_grid(2)
    with pytest.raises(ValueError):
        KineticState.from_spectra(vg, [TorusSpectrum.zeros(1, 2), TorusSpectrum.zeros(1, 3)])


fields = st.tuples(st.sampled_from([(1, 3), (1, 8), (2, 3)]), st.integers(0, 2**32 - 1))


@given(fields, st.floats(-2, 2), st.floats(0, 5))
def test_parseval_and_isometry(spec, v, t):
    (dim, n), seed = spec
    s = real_field(np.random.default_rng(seed), dim, n)
    nrm2 = l2_norm(s) ** 2
    quad = float(np.mean(np.abs(s.samples(3 * n)) ** 2))
    assert abs(nrm2 - quad) <= 1e-9 * nrm2
    moved = advect(s, [v] * dim, t)
    assert abs(l2_norm(moved) - l2_norm(s)) <= 1e-12 * l2_norm(s)


@given(st.integers(0, 2**32 - 1), st.floats(-1, 1), st.floats(0, 3), st.floats(0, 3))
def test_advect_semigroup(seed, v, t1, t2):
    s = real_field(np.random.default_rng(seed), 1, 6)
    two = advect(advect(s, [v], t1), [v], t2)
    one = advect(s, [v], t1 + t2)
    assert np.max(np.abs(two.coeffs - one.coeffs)) <= 1e-12 * max(1.0, l2_norm(s))


@given(st.integers(0, 2**32 - 1), st.floats(-1, 2), st.floats(-1, 2))
def test_bessel_composition(seed, s1, s2):
    s = real_field(np.random.default_rng(seed), 2, 3)
    a = bessel_multiplier(bessel_multiplier(s, s1), s2)
    b = bessel_multiplier(s, s1 + s2)
    assert np.allclose(a.coeffs, b.coeffs, rtol=1e-12, atol=1e-14)
