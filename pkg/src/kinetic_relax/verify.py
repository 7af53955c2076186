"""Invariant suites behind ``kinetic-relax verify``.

Each suite returns a list of :class:`Check` records; a suite passes when
every check does.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import abstract as ab
from . import boltzmann as bz
from . import goldstein_taylor as gt
from . import transport as tp
from .experiments import boltzmann_initial, random_real_coeffs
from .spectral import (
    KineticState,
    TorusSpectrum,
    advect,
    bessel_multiplier,
    l2_norm,
    to_spectrum,
)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    measured: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.suite}/{self.name}  measured={self.measured:.3e}  tol={self.tolerance:.1e}"


def _le(suite, name, value, tol):
    value = float(value)
    return Check(suite, name, value, tol, bool(math.isfinite(value) and value <= tol))


def _ge(suite, name, value, bound):
    value = float(value)
    return Check(suite, name, value, bound, bool(math.isfinite(value) and value >= bound))


def suite_parseval(seed: int = 0, inject: str | None = None) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    worst_rt = worst_pars = worst_iso = worst_semi = worst_bes = 0.0
    for dim, n in ((1, 8), (1, 16), (2, 6)):
        for _ in range(5):
            samples = rng.standard_normal((2 * n + 1,) * dim)
            s = to_spectrum(samples)
            worst_rt = max(worst_rt, np.max(np.abs(s.samples().real - samples)) / np.max(np.abs(samples)))
            quad = float(np.mean(np.abs(s.samples(4 * n)) ** 2))
            worst_pars = max(worst_pars, abs(l2_norm(s) ** 2 - quad) / l2_norm(s) ** 2)
            v, t1, t2 = rng.uniform(-1, 1, dim), rng.uniform(0, 3), rng.uniform(0, 3)
            worst_iso = max(worst_iso, abs(l2_norm(advect(s, v, t1)) - l2_norm(s)) / l2_norm(s))
            two = advect(advect(s, v, t1), v, t2)
            one = advect(s, v, t1 + t2)
            worst_semi = max(worst_semi, np.max(np.abs(two.coeffs - one.coeffs)) / l2_norm(s))
            b = bessel_multiplier(bessel_multiplier(s, 0.3), 0.9)
            worst_bes = max(worst_bes, np.max(np.abs(b.coeffs - bessel_multiplier(s, 1.2).coeffs)))
    out.append(_le("parseval", "round_trip", worst_rt, 1e-10))
    out.append(_le("parseval", "parseval_vs_quadrature", worst_pars, 1e-9))
    out.append(_le("parseval", "advection_isometry", worst_iso, 1e-12))
    out.append(_le("parseval", "advection_semigroup", worst_semi, 1e-12))
    out.append(_le("parseval", "bessel_composition", worst_bes, 1e-12))
    return out


def suite_lemmas(seed: int = 0, inject: str | None = None, trials: int = 20) -> list[Check]:
    rng = np.random.default_rng(seed)
    skew = ratio = balance = iso = 0.0
    forward_fail = 0
    T, dt = 5.0, 2e-4
    for _ in range(trials):
        m = int(rng.integers(2, 9))
        p = ab.random_pair(rng, m)
        if inject == "nonskew-A":
            p = ab.OperatorPair(p.A + 0.1 * np.eye(m), p.K, check=False)
        f0 = rng.standard_normal(m)
        skew = max(skew, float(np.max(np.abs(p.A + p.A.T))))
        r = ab.check_lemma0(p, f0, T, dt)
        if r is not None:
            ratio = max(ratio, r)
        tr = ab.evolve_damped(p, f0, T, dt)
        n0 = float(f0 @ f0)
        balance = max(balance, abs(n0 - tr.norms[-1] ** 2 - 2 * ab.dissipation_integral(tr)) / n0)
        g = ab.evolve_free(p, f0, T, 1e-2)
        iso = max(iso, float(np.max(np.abs(g.norms - g.norms[0]))) / g.norms[0])
        c_obs = float(np.linalg.eigvalsh(ab.observability_gramian(p, 2.0, 1e-2)).min())
        if c_obs >= 0.01 and not ab.decay_certificate(p, f0, 2.0, 1e-2, 20.0).verified:
            forward_fail += 1
    return [
        _le("lemmas", "A_skew", skew, 1e-12),
        _le("lemmas", "lemma0_ratio", ratio, 1 + 1e-6),
        _le("lemmas", "energy_balance", balance, 1e-6),
        _le("lemmas", "free_isometry", iso, 1e-8),
        _le("lemmas", "lemma2_forward_failures", forward_fail, 0),
    ]


def suite_gt_identity(seed: int = 0, inject: str | None = None) -> list[Check]:
    rng = np.random.default_rng(seed)
    n = 16
    const_err = exact_err = ineq_gap = 0.0
    for i in range(10):
        c = random_real_coeffs(rng, (2,), 1, n, 1.0)
        u0, v0 = TorusSpectrum(1, n, c[0]), TorusSpectrum(1, n, c[1])
        T = (1, 2, 4)[i % 3]
        nt = 8 * n * T + 1
        cs = gt.CrossSection.constant(float(rng.uniform(0.2, 2.0)))
        lhs = gt.observability_lhs(cs, u0, v0, T, nt)
        ident = gt.observability_identity(cs, u0, v0, T)
        const_err = max(const_err, abs(lhs - ident) / (1 + ident))
        sig = gt.CrossSection(1, samples=np.abs(rng.standard_normal(2 * n + 1)))
        lhs = gt.observability_lhs(sig, u0, v0, T, nt)
        exact = gt.observability_identity_exact(sig, u0, v0, T)
        exact_err = max(exact_err, abs(lhs - exact) / (1 + exact))
        prof = gt.asymptotic_profile(u0, v0)
        gap = T * sig.mean(2 * n) * gt.observability_rhs(u0, v0, prof) - gt.observability_identity(sig, u0, v0, T)
        ineq_gap = max(ineq_gap, gap)
    c = random_real_coeffs(rng, (2,), 1, n, 1.0)
    s0 = gt.GTState(TorusSpectrum(1, n, c[0]), TorusSpectrum(1, n, c[1]))
    tr, fin = gt.simulate(s0, gt.CrossSection.indicator(0.0, 0.5), 1e-2, 5.0, 1)
    rise = float(np.max(np.diff(tr.values), initial=0.0))
    return [
        _le("gt-identity", "constant_sigma_identity", const_err, 1e-8),
        _le("gt-identity", "cross_term_identity", exact_err, 1e-8),
        _le("gt-identity", "observability_inequality_gap", ineq_gap, 1e-10),
        _le("gt-identity", "mass_conservation", abs(fin.mass - s0.mass), 1e-12),
        _le("gt-identity", "energy_monotone", rise, 1e-10),
    ]


def suite_transport_obs(seed: int = 0, inject: str | None = None) -> list[Check]:
    rng = np.random.default_rng(seed)
    cfg = tp.TransportConfig.default(1, 8, 9)
    f0 = KineticState(cfg.vgrid, 1, 8, random_real_coeffs(rng, (9,), 1, 8, 1.0))
    T = 16.0
    lhs = tp.observability_lhs_plain(cfg, f0, T)
    asym = tp.asymptotic_observability(cfg, f0)
    c_emp = tp.observability_report_plain(cfg, f0, T)
    wcfg = tp.TransportConfig.default(1, 8, 9, gt.CrossSection.raised_cosine(0.5), 0.5)
    damp = tp.assemble_damping(wcfg)
    B = damp.B
    herm = float(np.max(np.abs(B - B.conj().T)))
    const = KineticState.from_function(lambda x, v: 1.0 + 0 * x[0], wcfg.vgrid, 1, 8)
    X = const.coeffs
    kern = float(np.max(np.abs((X - wcfg.vgrid.weights @ X) @ B.T)))
    run = tp.simulate(f0, wcfg, 1e-3, 1.0, 1, damp)
    tr = run.trace
    drop = tr.values[0] - tr.values[-1]
    bal = abs(drop - 2 * np.trapezoid(tr.dissipation, tr.times)) / drop
    plain = tp.simulate(f0, cfg, 1e-2, 2.0, 10)
    rise = float(np.max(np.diff(plain.trace.values), initial=0.0))
    return [
        _le("transport-obs", "lhs_over_T_vs_asymptote", abs(lhs / T - asym) / asym, 0.10),
        _ge("transport-obs", "C_emp_T16", c_emp, 0.4),
        _le("transport-obs", "damping_hermitian", herm, 1e-12),
        _ge("transport-obs", "damping_min_eig", float(damp.eigenvalues.min()), -1e-10),
        _le("transport-obs", "damping_kills_constants", kern, 1e-13),
        _le("transport-obs", "weak_energy_balance", bal, 1e-6),
        _le("transport-obs", "plain_energy_monotone", rise, 1e-10),
    ]


def suite_boltzmann_structure(seed: int = 0, inject: str | None = None) -> list[Check]:
    quad = bz.VelocityQuadrature()
    spec = bz.CollisionKernelSpec(0.5, 0.5)
    op = bz.assemble_dirichlet_form(spec, quad)
    phi = bz.kernel_basis(quad)
    inv = max(op.rayleigh(phi[:, i]) for i in range(4))
    median = float(np.median(np.diag(op.Q) / quad.weight))
    _, m1 = bz.collision_frequency(spec, quad)
    rng = np.random.default_rng(seed)
    f = boltzmann_initial(rng, quad, 1, project=False)
    proj = bz.kernel_projection(f, quad)
    idem = float(np.max(np.abs(bz.kernel_projection(proj, quad).coeffs - proj.coeffs)))
    mom = float(np.max(np.abs(bz.invariant_moments(proj, quad))))
    return [
        _le("boltzmann-structure", "Q_symmetric", float(np.max(np.abs(op.Q - op.Q.T))), 0.0),
        _ge("boltzmann-structure", "Q_min_eig", op.min_eigenvalue, -1e-10),
        _le("boltzmann-structure", "invariant_rayleigh_ratio", inv / median, 1e-2),
        _le("boltzmann-structure", "dropped_fraction", op.dropped_fraction, 1e-3),
        _ge("boltzmann-structure", "empirical_M1", m1, 1e-12),
        _le("boltzmann-structure", "mu_mass_error", abs(quad.mass - 1.0), 1e-3),
        _le("boltzmann-structure", "projection_idempotent", idem, 1e-12),
        _le("boltzmann-structure", "projected_moments", mom, 1e-12),
        _ge("boltzmann-structure", "B2_default_kernel", float(bz.check_B2(spec, quad)), 1.0),
    ]


SUITES = {
    "parseval": suite_parseval,
    "lemmas": suite_lemmas,
    "gt-identity": suite_gt_identity,
    "transport-obs": suite_transport_obs,
    "boltzmann-structure": suite_boltzmann_structure,
}


def thread_cap() -> int:
    raw = os.environ.get("KINETIC_RELAX_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_suite(name: str, seed: int = 0, inject: str | None = None) -> list[Check]:
    if name == "all":
        names = list(SUITES)
        with ThreadPoolExecutor(thread_cap()) as pool:
            parts = pool.map(lambda s: SUITES[s](seed=seed, inject=inject), names)
            return [c for part in parts for c in part]
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](seed=seed, inject=inject)
