"""Goldstein-Taylor two-speed relaxation model on the circle.

    u_t + u_x = sigma(x) (v - u)
    v_t - v_x = sigma(x) (u - v)

Stepping is Strang-split: half a step of exact counter-propagating
transport, an exact pointwise relaxation (u + v fixed, u - v multiplied
by exp(-2 sigma dt)) and another half step of transport. The relaxation
product is evaluated on the zero-padded 4N+1 grid and truncated back.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .analysis import EnergyTrace, RateFit, fit_exponential
from .spectral import (
    TorusSpectrum,
    advect,
    batch_samples,
    batch_spectrum,
    grid_points,
    to_spectrum,
)

__all__ = [
    "CrossSection",
    "GTState",
    "asymptotic_profile",
    "energy",
    "step",
    "simulate",
    "free_solution",
    "observability_lhs",
    "observability_identity",
    "observability_identity_exact",
    "observability_rhs",
    "decay_rate",
]

SIGMA_TOL = 1e-10


class CrossSection:
    """Nonnegative cross section sigma(x) on T^d.

    Either a pointwise ``profile`` (evaluated directly on whatever grid a
    computation needs; indicator profiles stay sharp) or fixed collocation
    ``samples`` (interpolated by their trigonometric polynomial and
    clipped at 0 when resampled).
    """

    def __init__(self, dim: int = 1, profile: Callable | None = None,
                 samples=None, name: str = "custom"):
        if (profile is None) == (samples is None):
            raise ValueError("give exactly one of profile or samples")
        self.dim = dim
        self.name = name
        self._profile = profile
        self._spectrum = None
        if samples is not None:
            samples = np.asarray(samples, dtype=float)
            if samples.ndim != dim:
                raise ValueError(f"samples must be a {dim}-d grid")
            if samples.min() < -SIGMA_TOL:
                raise ValueError("cross section must be nonnegative")
            self._spectrum = to_spectrum(samples)

    # named profiles
    @classmethod
    def constant(cls, c: float, dim: int = 1) -> "CrossSection":
        if c < 0:
            raise ValueError("cross section must be nonnegative")
        return cls(dim, lambda *x: np.full(np.shape(x[0]), float(c)), name=f"constant {c}")

    @classmethod
    def cosine_bump(cls, amplitude: float = 1.0, dim: int = 1) -> "CrossSection":
        """amplitude * prod_i max(0, cos 2 pi x_i); zero on a set of measure > 0."""
        def prof(*x):
            out = np.full(np.shape(x[0]), float(amplitude))
            for xi in x:
                out = out * np.maximum(0.0, np.cos(2 * np.pi * xi))
            return out
        return cls(dim, prof, name="cosine-bump")

    @classmethod
    def raised_cosine(cls, amplitude: float = 1.0, dim: int = 1) -> "CrossSection":
        """Smooth amplitude * (1 + cos 2 pi x_1) / ... vanishing at one point."""
        return cls(dim, lambda *x: amplitude * (1.0 + np.cos(2 * np.pi * x[0])),
                   name="raised-cosine")

    @classmethod
    def indicator(cls, a: float, b: float, dim: int = 1, level: float = 1.0) -> "CrossSection":
        """level on [a, b] in the first coordinate, zero elsewhere."""
        if not 0 <= a < b <= 1:
            raise ValueError("need 0 <= a < b <= 1")
        return cls(dim, lambda *x: np.where((x[0] >= a) & (x[0] <= b), float(level), 0.0),
                   name=f"indicator [{a}, {b}]")

    @classmethod
    def from_spectrum(cls, s: TorusSpectrum) -> "CrossSection":
        return cls(s.dim, samples=s.samples().real)

    def values(self, grid_cutoff: int) -> np.ndarray:
        """Samples on the (2K+1)^d collocation grid, K = grid_cutoff."""
        if self._profile is not None:
            x = grid_points(self.dim, grid_cutoff)
            vals = np.asarray(self._profile(*x), dtype=float)
        else:
            vals = np.clip(self._spectrum.samples(grid_cutoff).real, 0.0, None)
        if vals.min() < -SIGMA_TOL:
            raise ValueError("cross section has negative collocation values")
        return vals

    def fourier(self, cutoff: int, grid_cutoff: int | None = None) -> np.ndarray:
        """Coefficients sigma_hat_n, |n| <= cutoff, of the grid samples."""
        k = max(cutoff, grid_cutoff or 0)
        return batch_spectrum(self.values(k).astype(complex), self.dim, cutoff)

    def mean(self, grid_cutoff: int) -> float:
        return float(self.values(grid_cutoff).mean())

    def __repr__(self):
        return f"CrossSection({self.name!r}, dim={self.dim})"


@dataclass(frozen=True)
class GTState:
    u: TorusSpectrum
    v: TorusSpectrum
    time: float = 0.0

    def __post_init__(self):
        if self.u.dim != 1 or self.v.dim != 1 or self.u.cutoff != self.v.cutoff:
            raise ValueError("u and v must be 1-d spectra with a shared cutoff")

    @property
    def cutoff(self) -> int:
        return self.u.cutoff

    @property
    def mass(self) -> float:
        return float((self.u.mean + self.v.mean).real)


def asymptotic_profile(u0: TorusSpectrum, v0: TorusSpectrum) -> tuple[float, float]:
    """Both components relax to half the total mean."""
    m = 0.5 * float((u0.mean + v0.mean).real)
    return m, m


def _deviation_energy(c: np.ndarray, level: float) -> float:
    n = (c.size - 1) // 2
    d = c.copy()
    d[n] -= level
    return float(np.sum(np.abs(d) ** 2))


def energy(s: GTState, profile) -> float:
    """H_u = ||u - u_inf||^2 + ||v - v_inf||^2 by Parseval."""
    return (_deviation_energy(s.u.coeffs, profile[0])
            + _deviation_energy(s.v.coeffs, profile[1]))


def _relax_apply(w: np.ndarray, sigma_fine: np.ndarray, dt: float) -> np.ndarray:
    n = (w.shape[-1] - 1) // 2
    vals = batch_samples(w, 1, 2 * n)
    return batch_spectrum(vals * np.exp(-2.0 * sigma_fine * dt), 1, n)


def step(s: GTState, cs: CrossSection, dt: float) -> GTState:
    """One Strang step of length dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = s.cutoff
    sig = cs.values(2 * n)
    u = advect(s.u, 1.0, dt / 2).coeffs
    v = advect(s.v, -1.0, dt / 2).coeffs
    total, w = u + v, _relax_apply(u - v, sig, dt)
    u = TorusSpectrum(1, n, 0.5 * (total + w))
    v = TorusSpectrum(1, n, 0.5 * (total - w))
    return GTState(advect(u, 1.0, dt / 2), advect(v, -1.0, dt / 2), s.time + dt)


@lru_cache(maxsize=16)
def _step_matrix(cs: CrossSection, n: int, dt: float) -> np.ndarray:
    """Linear map (u, v) -> step(u, v) on stacked coefficient vectors."""
    m = 2 * n + 1
    sig = cs.values(2 * n)
    R = _relax_apply(np.eye(m, dtype=complex), sig, dt).T
    k = np.arange(-n, n + 1)
    hu = np.exp(-1j * np.pi * k * dt)       # advect by +1 over dt/2
    hv = np.conj(hu)
    H = np.concatenate([hu, hv])
    half = 0.5 * np.eye(m)
    # (u, v) -> (s, w) -> relax w -> back
    T = np.block([[half, half], [half, -half]]) * 2
    Tinv = np.block([[half, half], [half, -half]])
    D = np.block([[np.eye(m), np.zeros((m, m))], [np.zeros((m, m)), R]])
    return (H[:, None] * (Tinv @ D @ T)) * H[None, :]


def simulate(s0: GTState, cs: CrossSection, dt: float, T: float,
             sample_every: int = 1) -> tuple[EnergyTrace, GTState]:
    """Trace of H_u(t) and dissipation int sigma (u - v)^2 dx.

    The profile is fixed by the initial data; sampling happens every
    ``sample_every`` steps.
    """
    if dt <= 0 or T <= 0:
        raise ValueError("need dt > 0 and T > 0")
    n = s0.cutoff
    steps = int(round(T / dt))
    dt = T / steps
    profile = asymptotic_profile(s0.u, s0.v)
    S = _step_matrix(cs, n, dt)
    sig = cs.values(2 * n)
    x = np.concatenate([s0.u.coeffs, s0.v.coeffs])
    m = 2 * n + 1
    times, H, D = [], [], []

    def record(t, x):
        st = GTState(TorusSpectrum(1, n, x[:m]), TorusSpectrum(1, n, x[m:]), t)
        times.append(t)
        H.append(energy(st, profile))
        w = batch_samples(x[:m] - x[m:], 1, 2 * n).real
        D.append(float(np.mean(sig * w**2)))

    record(0.0, x)
    for i in range(1, steps + 1):
        x = S @ x
        if i % sample_every == 0 or i == steps:
            record(i * dt, x)
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("non-finite state during Goldstein-Taylor run")
    final = GTState(TorusSpectrum(1, n, x[:m]), TorusSpectrum(1, n, x[m:]), steps * dt)
    return EnergyTrace(np.array(times), np.array(H), np.array(D)), final


def free_solution(u0: TorusSpectrum, v0: TorusSpectrum, t: float) -> GTState:
    """(u0(x - t), v0(x + t))."""
    return GTState(advect(u0, 1.0, t), advect(v0, -1.0, t), t)


def observability_lhs(cs: CrossSection, u0: TorusSpectrum, v0: TorusSpectrum,
                      T: float, nt: int) -> float:
    """Trapezoid in t of int sigma (phi - psi)^2 dx along the free flow.

    The x-integral runs on the padded 4N+1 grid, which is exact whenever
    sigma is a trigonometric polynomial of degree at most 2N.
    """
    n = u0.cutoff
    sig = cs.values(2 * n)
    t = np.linspace(0.0, T, nt)
    k = np.arange(-n, n + 1)
    a = u0.coeffs[None, :] * np.exp(-2j * np.pi * k[None, :] * t[:, None])
    b = v0.coeffs[None, :] * np.exp(2j * np.pi * k[None, :] * t[:, None])
    h = batch_samples(a - b, 1, 2 * n).real
    inner = np.mean(sig[None, :] * h**2, axis=1)
    return float(np.trapezoid(inner, t))


def _check_integer_time(T) -> int:
    if int(T) != T or T <= 0:
        raise ValueError(f"closed form holds for positive integer T only, got {T}")
    return int(T)


def observability_identity(cs: CrossSection, u0: TorusSpectrum, v0: TorusSpectrum,
                           T: int) -> float:
    """T * int(sigma) * (sum_{n != 0} |a_n|^2 + |b_n|^2 + |a_0 - b_0|^2).

    Exact for constant sigma. For non-constant sigma the n / -n cross
    terms do not cancel; see :func:`observability_identity_exact`.
    """
    T = _check_integer_time(T)
    n = u0.cutoff
    a, b = u0.coeffs, v0.coeffs
    nz = np.arange(-n, n + 1) != 0
    bracket = (np.sum(np.abs(a[nz]) ** 2) + np.sum(np.abs(b[nz]) ** 2)
               + abs(a[n] - b[n]) ** 2)
    return float(T * cs.mean(2 * n) * bracket)


def observability_identity_exact(cs: CrossSection, u0: TorusSpectrum,
                                 v0: TorusSpectrum, T: int) -> float:
    """Closed form including the sigma_hat(-2k) coupling of a_k and b_{-k}.

    For integer T the time integral of (phi - psi)^2 at fixed x equals
    T * sum_k |a_k e(kx) - b_{-k} e(-kx)|^2, e(y) = exp(i 2 pi y).
    """
    T = _check_integer_time(T)
    n = u0.cutoff
    a, b = u0.coeffs, v0.coeffs
    b_rev = b[::-1]                       # b_{-k}
    sig = cs.values(2 * n)
    x = np.arange(sig.size) / sig.size
    k = np.arange(-n, n + 1)
    # int sigma exp(i 4 pi k x) dx on the same grid
    s2 = np.mean(sig[None, :] * np.exp(4j * np.pi * k[:, None] * x[None, :]), axis=1)
    smean = sig.mean()
    diag = smean * np.sum(np.abs(a) ** 2 + np.abs(b_rev) ** 2)
    cross = -2.0 * np.real(np.sum(a * np.conj(b_rev) * s2))
    return float(T * (diag + cross))


def observability_rhs(u0: TorusSpectrum, v0: TorusSpectrum, profile) -> float:
    """Sum over nonzero modes of |a_n|^2 + |b_n|^2.

    Zero modes are left out. ``profile`` is unused and kept so the call
    mirrors :func:`energy`.
    """
    a, b = u0.coeffs.copy(), v0.coeffs.copy()
    a[u0.cutoff] = 0.0
    b[v0.cutoff] = 0.0
    return float(np.sum(np.abs(a) ** 2) + np.sum(np.abs(b) ** 2))


def decay_rate(s0: GTState, cs: CrossSection, dt: float, T: float,
               window=None, sample_every: int = 10) -> tuple[RateFit, EnergyTrace]:
    """Exponential fit of H_u along a simulated run."""
    tr, _ = simulate(s0, cs, dt, T, sample_every)
    return fit_exponential(tr, window), tr
