"""Config-driven experiment runners used by the command line.

Each runner takes a resolved config dict and returns (csv_text, results)
where ``results`` is a JSON-ready dict.
"""

from __future__ import annotations

import math

import numpy as np

from . import abstract as ab
from . import boltzmann as bz
from . import goldstein_taylor as gt
from . import transport as tp
from .analysis import EnergyTrace, fit_exponential, fit_polynomial
from .spectral import KineticState, TorusSpectrum, batch_spectrum


def build_sigma(spec: dict, dim: int = 1) -> gt.CrossSection:
    kind = spec["profile"]
    if kind == "constant":
        return gt.CrossSection.constant(spec["value"], dim)
    if kind == "cosine-bump":
        return gt.CrossSection.cosine_bump(spec.get("amplitude", 1.0), dim)
    if kind == "cosine":
        mean, amp = spec["mean"], spec["amplitude"]
        return gt.CrossSection(dim, lambda *x: mean + amp * np.cos(2 * np.pi * x[0]),
                               name=f"cosine {mean:g}+{amp:g}")
    if kind == "indicator":
        a, b = spec["interval"]
        return gt.CrossSection.indicator(a, b, dim, spec.get("level", 1.0))
    if kind == "custom":
        return gt.CrossSection(1, samples=np.asarray(spec["samples"], dtype=float))
    raise ValueError(f"unknown sigma profile {kind!r}")


def random_real_coeffs(rng: np.random.Generator, lead: tuple, dim: int, cutoff: int,
                       decay: float) -> np.ndarray:
    """Coefficients of real fields with amplitudes ~ (1 + |n|)^(-decay)."""
    m = 2 * cutoff + 1
    shape = lead + (m,) * dim
    samples = rng.standard_normal(shape)
    c = batch_spectrum(samples.astype(complex), dim)
    axis = np.arange(-cutoff, cutoff + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    nrm = np.sqrt(sum(g**2 for g in grids))
    c = c * (1.0 + nrm) ** (-decay) * m ** (dim / 2)
    return c


def _finite(x):
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    return x


def _fit_dict(fit) -> dict:
    return {"rate": fit.rate, "norm_rate": fit.norm_rate, "r2": fit.r_squared,
            "window": list(fit.window), "model": fit.model}


def run_gt(cfg: dict):
    rng = np.random.default_rng(cfg["seed"])
    n = cfg["N"]
    cs = build_sigma(cfg["sigma"])
    init = cfg["initial"]
    if init.get("kind", "random") == "cosine":
        u0 = TorusSpectrum.from_function(lambda x: np.cos(2 * np.pi * x), 1, n)
        v0 = TorusSpectrum.zeros(1, n)
    else:
        c = random_real_coeffs(rng, (2,), 1, n, init.get("decay", 1.0))
        u0, v0 = TorusSpectrum(1, n, c[0]), TorusSpectrum(1, n, c[1])
    s0 = gt.GTState(u0, v0)
    tr, final = gt.simulate(s0, cs, cfg["dt"], cfg["T"], cfg["sample_every"])
    window = tuple(cfg["fit_window"]) if cfg["fit_window"] else None
    fit = fit_exponential(tr, window)
    T_obs = cfg["observability_T"]
    lhs = gt.observability_lhs(cs, u0, v0, T_obs, 128 * n * T_obs + 1)
    profile = gt.asymptotic_profile(u0, v0)
    rhs = gt.observability_rhs(u0, v0, profile)
    results = {
        "delta": fit.rate, "norm_rate": fit.norm_rate, "r2": fit.r_squared,
        "fit_window": list(fit.window),
        "C_obs": lhs / rhs if rhs > 0 else None,
        "observability_lhs": lhs,
        "observability_identity": gt.observability_identity(cs, u0, v0, T_obs),
        "observability_identity_exact": gt.observability_identity_exact(cs, u0, v0, T_obs),
        "mass_drift": abs(final.mass - s0.mass),
        "final_energy": float(tr.values[-1]),
    }
    return tr.to_csv("H_u"), results


def _transport_initial(cfg, rng, vgrid):
    d, n = cfg["d"], cfg["N"]
    init = cfg["initial"]
    if init.get("kind", "random") == "cosine":
        return KineticState.from_function(lambda x, v: np.cos(2 * np.pi * x[0]), vgrid, d, n)
    c = random_real_coeffs(rng, (vgrid.size,), d, n, init.get("decay", 1.0))
    return KineticState(vgrid, d, n, c)


def run_transport(cfg: dict):
    rng = np.random.default_rng(cfg["seed"])
    tc = tp.TransportConfig.default(cfg["d"], cfg["N"], cfg["n_v"],
                                    build_sigma(cfg["sigma"], cfg["d"]))
    f0 = _transport_initial(cfg, rng, tc.vgrid)
    run = tp.simulate(f0, tc, cfg["dt"], cfg["T"], cfg["sample_every"])
    fit = fit_exponential(run.trace)
    T_obs = cfg["observability_T"]
    results = {
        "delta": fit.rate, "norm_rate": fit.norm_rate, "r2": fit.r_squared,
        "C_emp": tp.observability_report_plain(tc, f0, T_obs),
        "f_inf": run.f_inf,
        "mass_drift": abs(tp.equilibrium(run.final) - run.f_inf),
    }
    return run.trace.to_csv("E_f"), results


def run_weak(cfg: dict):
    k1, k2, k3 = cfg["k"]
    rng = np.random.default_rng(cfg["seed"])
    tc = tp.TransportConfig.default(cfg["d"], cfg["N"], cfg["n_v"],
                                    build_sigma(cfg["sigma"], cfg["d"]), cfg["epsilon"])
    f0 = _transport_initial(cfg, rng, tc.vgrid)
    damping = tp.assemble_damping(tc)
    every = int(round(cfg["sample_interval"] / cfg["dt"]))
    run = tp.simulate(f0, tc, cfg["dt"], cfg["T"], every, damping)
    tr = run.trace
    slope, degree = tp.sobolev_growth_fit(tr.times, tr.extra["h_eps"])
    M = np.array([tp.weighted_moment(s, run.f_inf, k2) for s in run.states])
    rep = tp.jensen_iteration(tr.values, M, cfg["sample_interval"], k1, k2, k3, cfg["epsilon"])
    tail = fit_polynomial(tr, (0.5 * cfg["T"], cfg["T"]))
    results = {
        "poly_order": rep.order, "jensen_passed": rep.passed, "jensen_C": rep.C,
        "jensen_message": rep.message, "ammari_M": rep.envelope,
        "h_eps_slope": slope, "h_eps_degree": degree, "h_eps_ok": degree <= 1.1,
        "tail_slope": -tail.rate, "tail_r2": tail.r_squared,
        "damping_min_eig": float(damping.eigenvalues.min()),
        "initial_energy_l2": float(tr.values[0]),
        "initial_energy_h_eps": float(tr.extra["h_eps"][0]),
    }
    return tr.to_csv("E_f"), results


def _boltzmann_spec(cfg):
    a, b = cfg["alpha"], cfg["beta"]
    kern = {"power": bz.power_kernel, "angular": bz.angular_kernel,
            "noncutoff": bz.noncutoff_kernel}[cfg["kernel"]](b)
    m2 = 2.0 if cfg["kernel"] == "angular" else 1.0
    return bz.CollisionKernelSpec(a, b, 1.0, m2, kern)


def boltzmann_initial(rng, quad, cutoff, project=True) -> KineticState:
    c = random_real_coeffs(rng, (quad.size,), 2, cutoff, 1.0)
    c = c * np.exp(-quad.speed**2 / 4)[:, None, None]
    f0 = KineticState(quad.velocity_grid(), 2, cutoff, c)
    return bz.kernel_projection(f0, quad) if project else f0


def run_boltzmann(cfg: dict):
    rng = np.random.default_rng(cfg["seed"])
    spec = _boltzmann_spec(cfg)
    quad = bz.VelocityQuadrature(cfg["vmax"], cfg["h"], cfg["n_omega"])
    op = bz.assemble_dirichlet_form(spec, quad, cfg["interpolation"])
    f0 = boltzmann_initial(rng, quad, cfg["N"])
    k1, k2, k3 = cfg["k"]
    every = int(round(cfg["sample_interval"] / cfg["dt"]))
    orders = (spec.alpha, k2)
    tr, _ = bz.evolve_boltzmann(f0, op, cfg["T"], cfg["dt"], every, orders)
    _, m1 = bz.collision_frequency(spec, quad)
    lhs, c_emp = bz.observability_lhs_boltzmann(op, f0, cfg["observability_T"])
    table = []
    for eps in cfg["eps_sweep"]:
        s = bz.epsilon_split(op, eps)
        table.append({"eps": eps, "C1": s.C1, "C2": s.C2, "split_error": s.split_error})
    results = {
        "empirical_M1": m1, "C_emp": c_emp, "observability_lhs": lhs,
        "dropped_fraction": op.dropped_fraction, "mu_mass": quad.mass,
        "min_eigenvalue_Q": op.min_eigenvalue, "spectral_gap": op.spectral_gap(),
        "C2_table": table,
        "energy_balance": abs(tr.values[0] - tr.values[-1] - tr.extra["dissipated"][-1])
        / max(tr.values[0], 1e-300),
    }
    if spec.alpha > 0:
        fit = fit_exponential(tr)
        results.update({"delta": fit.rate, "norm_rate": fit.norm_rate, "r2": fit.r_squared})
    else:
        rep = bz.soft_decay_iteration(tr, cfg["sample_interval"], k1, k2, k3, spec.alpha)
        results.update({"p": rep.order, "soft_passed": rep.passed, "holder_ok": rep.holder_ok,
                        "growth_ok": rep.growth_ok, "recurrence_ok": rep.recurrence_ok,
                        "envelope_ok": rep.envelope_ok, "envelope_M": rep.envelope})
    return tr.to_csv("H_f"), results


def run_abstract(cfg: dict):
    rng = np.random.default_rng(cfg["seed"])
    m, T, dt = cfg["m"], cfg["T"], cfg["dt"]
    ratios, balance, verified, deltas, c_obs = [], [], 0, [], []
    first = None
    for i in range(cfg["trials"]):
        p = ab.random_pair(rng, m)
        f0 = rng.standard_normal(m)
        tr = ab.evolve_damped(p, f0, T, dt)
        if first is None:
            first = tr
        drop = tr.norms[0] ** 2 - tr.norms[-1] ** 2
        balance.append(abs(drop - 2 * ab.dissipation_integral(tr)) / tr.norms[0] ** 2)
        r = ab.check_lemma0(p, f0, T, dt)
        ratios.append(math.nan if r is None else r)
        c = float(np.linalg.eigvalsh(ab.observability_gramian(p, cfg["T0"], dt)).min())
        c_obs.append(c)
        cert = ab.decay_certificate(p, f0, cfg["T0"], dt, cfg["horizon"])
        verified += cert.verified
        deltas.append(cert.delta)
    trace = EnergyTrace(first.times, first.norms**2, first.dissipation)
    results = {
        "lemma0_max_ratio": float(np.nanmax(ratios)),
        "energy_balance_max": float(max(balance)),
        "lemma2_verified": int(verified), "trials": cfg["trials"],
        "min_observability": float(min(c_obs)),
        "delta_min": float(min(deltas)), "delta_max": float(max(deltas)),
    }
    return trace.to_csv("energy"), results


RUNNERS = {"gt": run_gt, "transport": run_transport, "weak": run_weak,
           "boltzmann": run_boltzmann, "abstract": run_abstract}


def run(cfg: dict):
    csv_text, results = RUNNERS[cfg["model"]](cfg)
    return csv_text, _finite(results)
