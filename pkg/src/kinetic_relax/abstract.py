"""Finite-dimensional damped/free evolution pair and the lemma checks.

The damped flow solves f' + A f = -K f and the free flow g' + A g = 0,
with A skew and K symmetric positive semidefinite. Time stepping is a
Strang splitting exp(-A h/2) exp(-K h) exp(-A h/2), so each free substep
is an exact rotation and each damping substep an exact contraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .analysis import window_decrement, window_integrals

__all__ = [
    "OperatorPair",
    "EvolutionTrace",
    "ObservabilityError",
    "evolve_damped",
    "evolve_free",
    "dissipation_integral",
    "check_lemma0",
    "check_lemma1",
    "observability_constant",
    "observability_gramian",
    "decay_from_observability",
    "DecayCertificate",
    "psd_split_identity",
    "random_pair",
]

VANISH = 1e-12


class ObservabilityError(RuntimeError):
    """Damped dissipation vanishes, so no observability constant exists."""


def psd_sqrt(K: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(K)
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T


@dataclass(frozen=True, eq=False)
class OperatorPair:
    """Skew transport A and PSD damping K acting on R^m."""

    A: np.ndarray
    K: np.ndarray
    check: bool = True

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        K = np.array(self.K, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or K.shape != A.shape:
            raise ValueError("A and K must be square matrices of equal size")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(K))):
            raise ValueError("operator entries must be finite")
        if self.check:
            if np.max(np.abs(A + A.T), initial=0.0) > 1e-12:
                raise ValueError("A is not skew: <Ax, x> != 0")
            if np.max(np.abs(K - K.T), initial=0.0) > 1e-12:
                raise ValueError("K is not symmetric")
            if np.linalg.eigvalsh(K).min() < -1e-10:
                raise ValueError("K is not positive semidefinite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "K", K)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @cached_property
    def K_sqrt(self) -> np.ndarray:
        return psd_sqrt(self.K)

    @cached_property
    def _K_eig(self):
        w, U = np.linalg.eigh(self.K)
        return np.clip(w, 0.0, None), U

    def free_propagator(self, h: float) -> np.ndarray:
        return expm(-h * self.A)

    def damping_propagator(self, h: float) -> np.ndarray:
        w, U = self._K_eig
        return (U * np.exp(-h * w)) @ U.T

    def step_matrix(self, h: float, damped: bool = True) -> np.ndarray:
        half = self.free_propagator(h / 2)
        if not damped:
            return half @ half
        return half @ self.damping_propagator(h) @ half

    def dissipation(self, x: np.ndarray) -> np.ndarray:
        """<K x, x> for one state or a stack of states (last axis)."""
        return np.einsum("...i,ij,...j->...", x, self.K, x)


@dataclass(frozen=True)
class EvolutionTrace:
    times: np.ndarray
    states: np.ndarray
    dissipation: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def _steps(T: float, dt: float) -> int:
    if not (math.isfinite(T) and math.isfinite(dt)):
        raise ValueError("T and dt must be finite")
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    return max(int(round(T / dt)), 1) if T > 0 else 0


def _evolve(p: OperatorPair, f0, T, dt, damped) -> EvolutionTrace:
    f0 = np.asarray(f0, dtype=float)
    if f0.shape != (p.m,) or not np.all(np.isfinite(f0)):
        raise ValueError(f"initial state must be a finite vector of length {p.m}")
    n = _steps(T, dt)
    h = T / n if n else 0.0
    S = p.step_matrix(h, damped) if n else np.eye(p.m)
    states = np.empty((n + 1, p.m))
    states[0] = f0
    for i in range(n):
        states[i + 1] = S @ states[i]
    times = np.linspace(0.0, T, n + 1)
    return EvolutionTrace(times, states, p.dissipation(states))


def evolve_damped(p: OperatorPair, f0, T: float, dt: float) -> EvolutionTrace:
    """Strang-split trajectory of f' = -(A + K) f, second order in dt."""
    return _evolve(p, f0, T, dt, damped=True)


def evolve_free(p: OperatorPair, f0, T: float, dt: float) -> EvolutionTrace:
    """Trajectory of g' = -A g; every step is an exact rotation."""
    return _evolve(p, f0, T, dt, damped=False)


def dissipation_integral(tr: EvolutionTrace, p: OperatorPair | None = None) -> float:
    """Composite trapezoid of ||K^(1/2) u(t)||^2 over the trace."""
    d = tr.dissipation if p is None else p.dissipation(tr.states)
    if d.size == 1:
        return 0.0
    return float(np.trapezoid(d, tr.times))


def check_lemma0(p: OperatorPair, f0, T: float, dt: float) -> float | None:
    """Damped over free dissipation; at most 1 when the free side is nonzero.

    Returns None when both integrals vanish (0/0).
    """
    damped = dissipation_integral(evolve_damped(p, f0, T, dt))
    free = dissipation_integral(evolve_free(p, f0, T, dt))
    if free <= VANISH:
        if damped <= VANISH:
            return None
        return math.inf
    return damped / free


def check_lemma1(p: OperatorPair, f0, T: float, dt: float) -> float:
    """Free over damped dissipation, i.e. 1/M1 for this initial state."""
    damped = dissipation_integral(evolve_damped(p, f0, T, dt))
    free = dissipation_integral(evolve_free(p, f0, T, dt))
    if damped <= VANISH:
        if free > VANISH:
            raise ObservabilityError(
                f"damped dissipation vanishes ({damped:.3e}) while free flow "
                f"dissipates {free:.3e}"
            )
        raise ObservabilityError("damped and free dissipation both vanish")
    return free / damped


def observability_constant(p: OperatorPair, f0, T: float, dt: float) -> float:
    """Free-flow dissipation over [0, T] divided by ||f0||^2."""
    f0 = np.asarray(f0, dtype=float)
    nrm2 = float(f0 @ f0)
    if nrm2 <= 0:
        raise ValueError("initial state must be nonzero")
    return dissipation_integral(evolve_free(p, f0, T, dt)) / nrm2


def observability_gramian(p: OperatorPair, T: float, dt: float) -> np.ndarray:
    """G with x.G.x = free dissipation integral from x, by trapezoid."""
    n = _steps(T, dt)
    h = T / n
    R = p.step_matrix(h, damped=False)
    Phi = np.eye(p.m)
    G = 0.5 * h * (Phi.T @ p.K @ Phi)
    for i in range(1, n + 1):
        Phi = R @ Phi
        wgt = 0.5 * h if i == n else h
        G += wgt * (Phi.T @ p.K @ Phi)
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class DecayCertificate:
    delta: float
    verified: bool
    T_star: float
    window: int
    observability: float
    contraction: float


def decay_from_observability(p: OperatorPair, f0, T0: float, dt: float,
                             horizon: float) -> tuple[float, bool]:
    """Exponential norm-decay rate derived from observability on [0, T0].

    Returns ``(delta, verified)``; see :func:`decay_certificate` for the
    intermediate quantities.
    """
    cert = decay_certificate(p, f0, T0, dt, horizon)
    return cert.delta, cert.verified


def decay_certificate(p: OperatorPair, f0, T0: float, dt: float,
                      horizon: float) -> DecayCertificate:
    """Run the window-selection argument on one damped trajectory.

    With T* = k T0 (k = floor(horizon / (2 T0))), the pigeonhole window p
    carries at most 1/k of the dissipated energy, and the uniform
    observability constant bounds ||f(pT0)||. The rate is
    delta = -ln ||Phi(T*)|| / T*, with Phi the discrete propagator; the
    semigroup property then gives ||f(t)|| <= exp(-delta (t - T*)) ||f0||
    for t >= T*, which is checked along the trace up to ``horizon``.
    """
    f0 = np.asarray(f0, dtype=float)
    k = int(horizon // (2 * T0))
    if k < 1:
        raise ValueError("horizon must cover at least 2 * T0")
    n0 = _steps(T0, dt)
    h = T0 / n0
    c_obs = float(np.linalg.eigvalsh(observability_gramian(p, T0, dt)).min())
    if c_obs <= VANISH:
        return DecayCertificate(0.0, False, k * T0, -1, c_obs, 1.0)

    n_total = int(round(horizon / h))
    tr = evolve_damped(p, f0, n_total * h, h)
    nrm0 = float(np.linalg.norm(f0))
    win = window_decrement(tr.times, tr.dissipation, T0, k)
    w_int = window_integrals(tr.times, tr.dissipation, T0, k)
    balance_ok = w_int[win] <= 0.5 * nrm0**2 / k * (1 + 1e-6) + 1e-14

    S = p.step_matrix(h, damped=True)
    Phi = np.linalg.matrix_power(S, k * n0)
    q = float(np.linalg.norm(Phi, 2))
    if not (q < 1.0):
        return DecayCertificate(0.0, False, k * T0, win, c_obs, q)
    T_star = k * T0
    delta = -math.log(q) / T_star
    late = tr.times >= T_star - 1e-12
    envelope = np.exp(-delta * (tr.times[late] - T_star)) * nrm0
    env_ok = bool(np.all(tr.norms[late] <= envelope * (1 + 1e-9) + 1e-14))
    return DecayCertificate(delta, bool(balance_ok and env_ok and delta > 0),
                            T_star, win, c_obs, q)


def psd_split_identity(K1: np.ndarray, K2: np.ndarray, x: np.ndarray) -> float:
    """|‖K^(1/2)x‖^2 - ‖K1^(1/2)x‖^2 - ‖K2^(1/2)x‖^2| for K = K1 + K2."""
    s = psd_sqrt(K1 + K2)
    s1, s2 = psd_sqrt(K1), psd_sqrt(K2)
    total = float(np.sum((s @ x) ** 2))
    return abs(total - float(np.sum((s1 @ x) ** 2)) - float(np.sum((s2 @ x) ** 2)))


def random_pair(rng: np.random.Generator, m: int, rank: int | None = None,
                scale: float = 1.0) -> OperatorPair:
    """Random skew A and PSD K of the given rank (default: random)."""
    G = rng.standard_normal((m, m)) * scale
    A = G - G.T
    r = int(rng.integers(1, m + 1)) if rank is None else rank
    B = rng.standard_normal((m, r)) / math.sqrt(r)
    K = B @ B.T
    return OperatorPair(A, 0.5 * (K + K.T))
