"""Linear transport with velocity relaxation on T^d x V.

Plain model:  f_t + v.grad f = sigma(x) (f_bar - f)
Weak model:   f_t + v.grad f = -K f,  K = P sigma (1 - Lap)^(-eps) sigma P

P is the identity minus velocity averaging, so K f = B (f - f_bar) with B
acting on x only. With this convention d/dt ||f||^2 equals
-2 ||(1 - Lap)^(-eps/2) sigma (f_bar - f)||^2.

All steppers are Strang splittings of exact free transport (a phase per
mode and velocity) and an exact damping map that leaves f_bar fixed and
contracts the deviation f - f_bar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .analysis import EnergyTrace, RateFit, ammari_bound, fit_exponential
from .goldstein_taylor import CrossSection
from .spectral import (
    KineticState,
    VelocityGrid,
    batch_samples,
    batch_spectrum,
    bessel_symbol,
    transport_phase,
    uniform_velocity_grid,
    wavenumbers,
)

__all__ = [
    "TransportConfig",
    "DampingMatrix",
    "TransportRun",
    "JensenReport",
    "assemble_damping",
    "equilibrium",
    "energy",
    "sobolev_energy",
    "step_plain",
    "step_weak",
    "simulate",
    "observability_lhs_plain",
    "observability_report_plain",
    "observability_lhs_weak",
    "asymptotic_observability",
    "sobolev_growth_check",
    "sobolev_growth_fit",
    "jensen_iteration",
]


@dataclass(frozen=True, eq=False)
class TransportConfig:
    dim: int
    cutoff: int
    vgrid: VelocityGrid
    sigma: CrossSection
    epsilon: float = 0.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.cutoff < 0:
            raise ValueError("cutoff must be nonnegative")
        if self.vgrid.dim != self.dim or self.sigma.dim != self.dim:
            raise ValueError("velocity grid, cross section and torus dimensions differ")
        if abs(self.vgrid.measure - 1.0) > 1e-12:
            raise ValueError(f"velocity weights sum to {self.vgrid.measure!r}, expected 1")
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ValueError("epsilon must be a finite nonnegative number")

    @classmethod
    def default(cls, dim: int = 1, cutoff: int = 8, n_v: int = 9,
                sigma: CrossSection | None = None, epsilon: float = 0.0):
        sigma = CrossSection.constant(1.0, dim) if sigma is None else sigma
        return cls(dim, cutoff, uniform_velocity_grid(n_v, dim), sigma, epsilon)

    @property
    def modes(self) -> int:
        return (2 * self.cutoff + 1) ** self.dim

    @cached_property
    def sigma_fine(self) -> np.ndarray:
        """Cross section on the padded (4N+1)^d grid."""
        return self.sigma.values(2 * self.cutoff)

    def phase(self, t: float) -> np.ndarray:
        return transport_phase(self.dim, self.cutoff, self.vgrid.nodes, t).reshape(
            self.vgrid.size, self.modes)


def _flat(f: KineticState) -> np.ndarray:
    return f.coeffs.reshape(f.vgrid.size, -1)


def _shape(cfg: TransportConfig) -> tuple:
    return (cfg.vgrid.size,) + (2 * cfg.cutoff + 1,) * cfg.dim


def _check_state(f: KineticState, cfg: TransportConfig):
    if f.vgrid.size != cfg.vgrid.size or f.dim != cfg.dim or f.cutoff != cfg.cutoff:
        raise ValueError("state does not match the configuration")


# damping operators

def _relax_matrix(cfg: TransportConfig, dt: float) -> np.ndarray:
    """Galerkin matrix of multiplication by exp(-sigma dt), padded grid."""
    n, d, m = cfg.cutoff, cfg.dim, cfg.modes
    basis = np.eye(m, dtype=complex).reshape((m,) + (2 * n + 1,) * d)
    vals = batch_samples(basis, d, 2 * n) * np.exp(-dt * cfg.sigma_fine)
    return batch_spectrum(vals, d, n).reshape(m, m).T


@dataclass(frozen=True, eq=False)
class DampingMatrix:
    """B = S^H M_eps S on the Fourier modes of T^d.

    S maps modes |m| <= N to the products sigma * e_m, kept up to 2N, and
    M_eps = (1 + 4 pi^2 |n|^2)^(-eps) is diagonal.
    """

    B: np.ndarray
    epsilon: float

    @cached_property
    def _eig(self):
        w, U = np.linalg.eigh(self.B)
        return np.clip(w, 0.0, None), U

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.B)

    def propagator(self, dt: float) -> np.ndarray:
        w, U = self._eig
        return (U * np.exp(-dt * w)) @ U.conj().T

    def form(self, dev: np.ndarray) -> np.ndarray:
        """dev_j^H B dev_j for each row of a (n_v, modes) array."""
        return np.real(np.einsum("ji,ik,jk->j", dev.conj(), self.B, dev))


def assemble_damping(cfg: TransportConfig, sigma_resolution: int | None = None) -> DampingMatrix:
    """Dense damping matrix over the (2N+1)^d modes of ``cfg``."""
    n, d = cfg.cutoff, cfg.dim
    k = 2 * n
    res = sigma_resolution or max(8 * n, 64)
    sig_hat = cfg.sigma.fourier(3 * n, grid_cutoff=res)
    out = wavenumbers(d, k).reshape(d, -1).T
    inn = wavenumbers(d, n).reshape(d, -1).T
    diff = out[:, None, :] - inn[None, :, :] + 3 * n
    S = sig_hat[tuple(diff[..., i] for i in range(d))]
    mult = bessel_symbol(d, k, 2 * cfg.epsilon).ravel()
    B = S.conj().T @ (mult[:, None] * S)
    return DampingMatrix(0.5 * (B + B.conj().T), cfg.epsilon)


# functionals

def equilibrium(f0: KineticState) -> float:
    """f_inf = int int f0 dx dv: weighted sum of zero modes."""
    n = f0.cutoff
    zero = f0.coeffs[(slice(None),) + (n,) * f0.dim]
    return float(np.real(f0.vgrid.weights @ zero))


def _deviation(f: KineticState, f_inf: float) -> np.ndarray:
    c = f.coeffs.copy()
    c[(slice(None),) + (f.cutoff,) * f.dim] -= f_inf
    return c


def energy(f: KineticState, f_inf: float) -> float:
    """E_f = int int |f - f_inf|^2 dv dx via Parseval and velocity weights."""
    dev = _deviation(f, f_inf).reshape(f.vgrid.size, -1)
    return float(f.vgrid.weights @ np.sum(np.abs(dev) ** 2, axis=1))


def sobolev_energy(f: KineticState, f_inf: float, order: float) -> float:
    """int ||(1 - Lap)^(order/2) (f - f_inf)||^2 dv."""
    dev = _deviation(f, f_inf).reshape(f.vgrid.size, -1)
    mult = bessel_symbol(f.dim, f.cutoff, -2 * order).ravel()
    return float(f.vgrid.weights @ (np.abs(dev) ** 2 @ mult))


# stepping

def _split_step(X, w, half, E):
    X = X * half
    avg = w @ X
    X = avg + (X - avg) @ E.T
    return X * half


def step_plain(f: KineticState, cfg: TransportConfig, dt: float) -> KineticState:
    """One Strang step of the relaxation model."""
    if cfg.epsilon != 0:
        raise ValueError("step_plain needs epsilon = 0; use step_weak")
    if dt <= 0:
        raise ValueError("dt must be positive")
    _check_state(f, cfg)
    X = _split_step(_flat(f), cfg.vgrid.weights, cfg.phase(dt / 2), _relax_matrix(cfg, dt))
    return f.with_coeffs(X.reshape(_shape(cfg)))


def step_weak(f: KineticState, cfg: TransportConfig, dt: float,
              damping: DampingMatrix | None = None) -> KineticState:
    """One Strang step of the weak-damping model; ``damping`` is required."""
    if damping is None:
        raise ValueError("damping matrix not assembled; call assemble_damping(cfg)")
    if cfg.epsilon <= 0:
        raise ValueError("step_weak needs epsilon > 0")
    if damping.B.shape != (cfg.modes, cfg.modes):
        raise ValueError("damping matrix does not match the configuration")
    if dt <= 0:
        raise ValueError("dt must be positive")
    _check_state(f, cfg)
    X = _split_step(_flat(f), cfg.vgrid.weights, cfg.phase(dt / 2), damping.propagator(dt))
    return f.with_coeffs(X.reshape(_shape(cfg)))


def _plain_dissipation(cfg: TransportConfig, X: np.ndarray) -> float:
    dev = X - cfg.vgrid.weights @ X
    vals = batch_samples(dev.reshape(_shape(cfg)), cfg.dim, 2 * cfg.cutoff)
    per = np.mean(cfg.sigma_fine * np.abs(vals) ** 2, axis=tuple(range(1, cfg.dim + 1)))
    return float(cfg.vgrid.weights @ per)


def _weak_dissipation(cfg: TransportConfig, damping: DampingMatrix, X: np.ndarray) -> float:
    dev = X - cfg.vgrid.weights @ X
    return float(cfg.vgrid.weights @ damping.form(dev))


@dataclass(frozen=True)
class TransportRun:
    trace: EnergyTrace
    states: list = field(repr=False)
    f_inf: float = 0.0

    @property
    def final(self) -> KineticState:
        return self.states[-1]


def simulate(f0: KineticState, cfg: TransportConfig, dt: float, T: float,
             sample_every: int = 1, damping: DampingMatrix | None = None) -> TransportRun:
    """Run the plain (eps = 0) or weak model and record E_f and dissipation.

    The trace's extra column ``h_eps`` holds the H^eps energy of f - f_inf.
    Samples are taken every ``sample_every`` steps plus the final time.
    """
    if dt <= 0 or T <= 0:
        raise ValueError("need dt > 0 and T > 0")
    _check_state(f0, cfg)
    weak = cfg.epsilon > 0
    if weak and damping is None:
        damping = assemble_damping(cfg)
    steps = int(round(T / dt))
    dt = T / steps
    E = damping.propagator(dt) if weak else _relax_matrix(cfg, dt)
    half = cfg.phase(dt / 2)
    w = cfg.vgrid.weights
    f_inf = equilibrium(f0)
    X = _flat(f0).copy()
    times, H, D, states = [], [], [], []

    def record(t, X):
        st = f0.with_coeffs(X.reshape(_shape(cfg)))
        states.append(st)
        times.append(t)
        H.append(energy(st, f_inf))
        D.append(_weak_dissipation(cfg, damping, X) if weak else _plain_dissipation(cfg, X))

    record(0.0, X)
    for i in range(1, steps + 1):
        X = _split_step(X, w, half, E)
        if i % sample_every == 0 or i == steps:
            if not np.all(np.isfinite(X)):
                raise FloatingPointError(f"non-finite state at t={i * dt}")
            record(i * dt, X)
    h_eps = [sobolev_energy(s, f_inf, cfg.epsilon) for s in states]
    tr = EnergyTrace(np.array(times), np.array(H), np.array(D), {"h_eps": np.array(h_eps)})
    return TransportRun(tr, states, f_inf)


# observability along free transport

def _default_nt(cfg: TransportConfig, T: float) -> int:
    vmax = float(np.max(np.abs(cfg.vgrid.nodes), initial=0.0))
    return int(math.ceil(64 * T * (1 + 2 * cfg.cutoff * vmax * cfg.dim))) + 1


def _free_integral(cfg, g0, T, nt, integrand, chunk=256):
    _check_state(g0, cfg)
    if T < 0:
        raise ValueError("T must be nonnegative")
    nt = nt or _default_nt(cfg, T)
    if nt < 2:
        raise ValueError("need at least two time nodes")
    t = np.linspace(0.0, T, nt)
    X0 = _flat(g0)
    n = wavenumbers(cfg.dim, cfg.cutoff).reshape(cfg.dim, -1)
    freq = cfg.vgrid.nodes @ n                      # (n_v, modes)
    vals = np.empty(nt)
    for s in range(0, nt, chunk):
        tc = t[s:s + chunk]
        G = X0[None] * np.exp(-2j * np.pi * tc[:, None, None] * freq[None])
        dev = G - np.einsum("j,tjm->tm", cfg.vgrid.weights, G)[:, None, :]
        vals[s:s + chunk] = integrand(dev)
    return float(np.trapezoid(vals, t))


def observability_lhs_plain(cfg: TransportConfig, g0: KineticState, T: float,
                            nt: int | None = None) -> float:
    """int_0^T int int sigma |g - g_bar|^2 along g(t) = g0(x - vt, v)."""
    shape = _shape(cfg)
    axes = tuple(range(2, cfg.dim + 2))

    def integrand(dev):
        vals = batch_samples(dev.reshape((dev.shape[0],) + shape), cfg.dim, 2 * cfg.cutoff)
        per = np.mean(cfg.sigma_fine * np.abs(vals) ** 2, axis=axes)
        return per @ cfg.vgrid.weights

    return _free_integral(cfg, g0, T, nt, integrand)


def observability_report_plain(cfg: TransportConfig, g0: KineticState, T: float,
                               nt: int | None = None) -> float:
    """Empirical C(T) = lhs / (T * E_g(0))."""
    f_inf = equilibrium(g0)
    e0 = energy(g0, f_inf)
    if e0 <= 1e-24 * max(1.0, f_inf**2):
        raise ValueError("initial data sits at equilibrium; C(T) is undefined")
    return observability_lhs_plain(cfg, g0, T, nt) / (T * e0)


def observability_lhs_weak(cfg: TransportConfig, g0: KineticState, T: float,
                           nt: int | None = None,
                           damping: DampingMatrix | None = None) -> float:
    """int_0^T sum_j w_j <B (g - g_bar), g - g_bar> along free transport."""
    if cfg.epsilon <= 0:
        raise ValueError("weak observability needs epsilon > 0")
    damping = damping or assemble_damping(cfg)
    B, w = damping.B, cfg.vgrid.weights

    def integrand(dev):
        return np.real(np.einsum("tji,ik,tjk,j->t", dev.conj(), B, dev, w))

    return _free_integral(cfg, g0, T, nt, integrand)


def asymptotic_observability(cfg: TransportConfig, g0: KineticState) -> float:
    """Long-time average of int int |g - g_bar|^2 for sigma = 1 in d = 1.

    For n != 0 the phases n v_j are distinct, so cross-velocity terms
    average out and node j keeps (w_j - w_j^2) |A_n(v_j)|^2; the n = 0
    layer does not move.
    """
    X = _flat(g0)
    w = cfg.vgrid.weights
    n0 = (cfg.modes - 1) // 2
    amp = np.abs(X) ** 2
    moving = np.sum((w - w**2) @ amp) - (w - w**2) @ amp[:, n0]
    a0 = X[:, n0]
    still = w @ np.abs(a0 - w @ a0) ** 2
    return float(moving + still)


# weak-damping diagnostics

def sobolev_growth_fit(times, h_eps) -> tuple[float, float]:
    """(slope, degree) of the H^eps energy along a run.

    slope: least-squares line through (t, h). degree: log-log slope of
    the running-max excess over the initial value, 0 when there is none.
    """
    t = np.asarray(times, dtype=float)
    h = np.asarray(h_eps, dtype=float)
    slope = float(np.polyfit(t, h, 1)[0]) if t.size > 1 else 0.0
    excess = np.maximum.accumulate(h) - h[0]
    keep = (t > 0) & (excess > 1e-14 * max(h[0], 1e-300))
    if np.count_nonzero(keep) < 2:
        return slope, 0.0
    degree = float(np.polyfit(np.log(t[keep]), np.log(excess[keep]), 1)[0])
    return slope, degree


def sobolev_growth_check(run: TransportRun | tuple, epsilon: float | None = None,
                         max_degree: float = 1.1) -> tuple[float, bool]:
    """(slope, ok): ok iff the H^eps energy grows at most linearly.

    ``run`` is a :class:`TransportRun` or a pair (times, states).
    """
    if isinstance(run, TransportRun):
        times = run.trace.times
        states = run.states
        f_inf = run.f_inf
    else:
        times, states = run
        f_inf = equilibrium(states[0])
    if epsilon is None:
        if not isinstance(run, TransportRun):
            raise ValueError("epsilon required for raw state lists")
        h = run.trace.extra["h_eps"]
    else:
        h = np.array([sobolev_energy(s, f_inf, epsilon) for s in states])
    slope, degree = sobolev_growth_fit(times, h)
    return slope, bool(degree <= max_degree)


@dataclass(frozen=True)
class JensenReport:
    passed: bool
    order: float
    C: float
    growth_constant: float
    envelope: float
    zeta: float
    message: str = ""


def weighted_moment(f: KineticState, f_inf: float, k2: float) -> float:
    """sum_n |n|^k2 int |f_hat(n, v) - f_inf delta_n|^2 dv."""
    dev = _deviation(f, f_inf).reshape(f.vgrid.size, -1)
    n = wavenumbers(f.dim, f.cutoff).reshape(f.dim, -1)
    wgt = np.sqrt(np.sum(n**2, axis=0)) ** k2
    return float(f.vgrid.weights @ (np.abs(dev) ** 2 @ wgt))


def jensen_iteration(H, M, T: float, k1: float, k2: float, k3: float,
                     epsilon: float) -> JensenReport:
    """Check the sampled energies against the Jensen-type recurrence.

    H[l] = H_f(lT), M[l] = sum |n|^k2 |f_hat(lT)|^2. With
    C' = max_{l>=1} M[l] / (l T), the largest C with
        H[l] - C H[l] (H[l] / (l T C'))^(k3/k1) >= H[l+1]   (l >= 1)
    is fitted; the scaled sequence E_l = H[l] / (l T C') then has to pass
    :func:`ammari_bound` with zeta = k3/k1 - 1. The implied polynomial
    order is k1/k3.
    """
    if min(k1, k2, k3) <= 0:
        raise ValueError("k1, k2, k3 must be positive")
    if not (-2 * epsilon * k1 + k2 * k3 > 0):
        raise ValueError(f"constraint -2 eps k1 + k2 k3 > 0 fails ({-2 * epsilon * k1 + k2 * k3!r})")
    if not k2 < epsilon:
        raise ValueError(f"constraint k2 < eps fails (k2={k2}, eps={epsilon})")
    H = np.asarray(H, dtype=float)
    M = np.asarray(M, dtype=float)
    if H.shape != M.shape or H.size < 3:
        raise ValueError("H and M must be equal-length sequences with at least 3 terms")
    order = k1 / k3
    zeta = k3 / k1 - 1.0
    if np.max(H) <= 1e-300:
        return JensenReport(True, order, math.nan, 0.0, 0.0, zeta, "equilibrium: vacuous")
    ell = np.arange(H.size, dtype=float)
    Cp = float(np.max(M[1:] / (ell[1:] * T)))
    if Cp <= 0:
        return JensenReport(False, order, 0.0, Cp, math.inf, zeta, "no weighted moment")
    E = H[1:] / (ell[1:] * T * Cp)
    drops = (H[1:-1] - H[2:]) / (H[1:-1] * E[:-1] ** (k3 / k1))
    C = float(np.min(drops))
    if not C > 0:
        l_bad = int(np.argmin(drops)) + 1
        return JensenReport(False, order, C, Cp, math.inf, zeta,
                            f"energy fails to drop between l={l_bad} and l={l_bad + 1}")
    try:
        env = ammari_bound(E, C, zeta)
    except ValueError as exc:
        return JensenReport(False, order, C, Cp, math.inf, zeta, str(exc))
    return JensenReport(True, order, C, Cp, env, zeta, "recurrence holds")


def decay_fit(run: TransportRun, window=None) -> RateFit:
    return fit_exponential(run.trace, window)
