"""Discrete-velocity linearized Boltzmann operator in two velocity dimensions.

The operator is built from its Dirichlet form rather than by discretizing
the gain and loss integrals. Writing h = f / sqrt(mu),

    D(f) = 1/4 sum_{j,k,l} c_jkl (h(v'_*) + h(v') - h(v_k) - h(v_j))^2,
    c_jkl = w_j w_k dw B(|v_j - v_k|, omega_l) mu_j mu_k,

with post-collision velocities from the omega-representation and h at
off-grid points taken from a local interpolant. D is a sum of rank-one
squares, hence D(f) = f^T Q f with Q symmetric PSD by construction. On
the discrete space with weights h^2 the operator is L = -Q / h^2, so that
<-L f, f> = D(f) and dH/dt = -2 D(f) along the homogeneous flow.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .analysis import EnergyTrace, RecurrenceViolation, ammari_bound, fit_polynomial
from .spectral import KineticState, VelocityGrid, transport_phase, wavenumbers

__all__ = [
    "MaxwellianParams",
    "maxwellian",
    "CollisionKernelSpec",
    "VelocityQuadrature",
    "LinearizedOperator",
    "collision_frequency",
    "check_B2",
    "assemble_dirichlet_form",
    "kernel_basis",
    "kernel_projection",
    "evolve_boltzmann",
    "observability_lhs_boltzmann",
    "EpsilonSplit",
    "epsilon_split",
    "SoftDecayReport",
    "soft_decay_iteration",
    "weight_column",
    "weighted_norm",
    "power_kernel",
    "angular_kernel",
    "noncutoff_kernel",
]

DIM = 2
TRIVIAL = 1e-12


@dataclass(frozen=True)
class MaxwellianParams:
    rho: float = 1.0
    u: tuple = (0.0, 0.0)
    T: float = 1.0

    def __post_init__(self):
        if not (self.rho > 0 and self.T > 0):
            raise ValueError("density and temperature must be positive")


def maxwellian(v, params: MaxwellianParams | None = None) -> np.ndarray:
    """rho (2 pi T)^(-d/2) exp(-|v - u|^2 / (2T)); v has shape (..., d)."""
    p = params or MaxwellianParams(u=(0.0,) * np.shape(v)[-1])
    v = np.asarray(v, dtype=float)
    d = v.shape[-1]
    u = np.asarray(p.u, dtype=float)
    if u.shape != (d,):
        raise ValueError("mean velocity dimension does not match v")
    r2 = np.sum((v - u) ** 2, axis=-1)
    return p.rho / (2 * np.pi * p.T) ** (d / 2) * np.exp(-r2 / (2 * p.T))


# kernels take (r, c) with r = |v - v_*| and c = omega.(v_* - v) / r

def power_kernel(beta: float) -> Callable:
    def kern(r, c):
        return np.asarray(r, dtype=float) ** beta
    kern.label = f"power {beta:g}"
    return kern


def angular_kernel(beta: float) -> Callable:
    """|v - v_*|^beta (1 + |cos theta|)."""
    def kern(r, c):
        return np.asarray(r, dtype=float) ** beta * (1.0 + np.abs(c))
    kern.label = f"angular {beta:g}"
    return kern


def noncutoff_kernel(beta: float, s: float = 0.5) -> Callable:
    """|v - v_*|^beta theta^(-s), theta = 2 arcsin|c| the deviation angle."""
    def kern(r, c):
        theta = 2.0 * np.arcsin(np.clip(np.abs(c), 0.0, 1.0))
        with np.errstate(divide="ignore"):
            return np.asarray(r, dtype=float) ** beta * theta ** (-s)
    kern.label = f"noncutoff {beta:g}"
    return kern


@dataclass(frozen=True, eq=False)
class CollisionKernelSpec:
    alpha: float = 0.5
    beta: float = 0.5
    M1: float = 1.0
    M2: float = 1.0
    kernel: Callable | None = None

    def __post_init__(self):
        if not self.alpha > 1 - DIM:
            raise ValueError(f"alpha must exceed {1 - DIM}")
        if not (1 - DIM < self.beta <= self.alpha + 2.0 / 3.0):
            raise ValueError(f"beta must lie in ({1 - DIM}, alpha + 2/3]")
        if not (self.M1 > 0 and self.M2 > 0):
            raise ValueError("M1 and M2 must be positive")
        if self.kernel is None:
            object.__setattr__(self, "kernel", power_kernel(self.beta))

    def evaluate(self, r, c) -> np.ndarray:
        out = np.asarray(self.kernel(r, c), dtype=float)
        if np.any(out[np.isfinite(out)] < 0):
            raise ValueError("collision kernel must be nonnegative")
        return out


@dataclass(frozen=True, eq=False)
class VelocityQuadrature:
    """Cell-centred grid on [-vmax, vmax]^2 with n_omega angular nodes."""

    vmax: float = 6.0
    h: float = 0.5
    n_omega: int = 16

    def __post_init__(self):
        n = 2 * self.vmax / self.h
        if abs(n - round(n)) > 1e-9 or n < 2:
            raise ValueError("2 vmax / h must be an integer >= 2")
        if self.n_omega < 1:
            raise ValueError("n_omega must be positive")

    @property
    def n_axis(self) -> int:
        return int(round(2 * self.vmax / self.h))

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.vmax + self.h * (np.arange(self.n_axis) + 0.5)

    @cached_property
    def nodes(self) -> np.ndarray:
        vx, vy = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([vx.ravel(), vy.ravel()], axis=1)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def weight(self) -> float:
        return self.h**2

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(self.size, self.weight)

    @cached_property
    def mu(self) -> np.ndarray:
        return maxwellian(self.nodes)

    @cached_property
    def speed(self) -> np.ndarray:
        return np.linalg.norm(self.nodes, axis=1)

    @cached_property
    def omegas(self) -> np.ndarray:
        a = 2 * np.pi * np.arange(self.n_omega) / self.n_omega
        return np.stack([np.cos(a), np.sin(a)], axis=1)

    @property
    def d_omega(self) -> float:
        return 2 * np.pi / self.n_omega

    @property
    def mass(self) -> float:
        return float(self.weight * np.sum(self.mu))

    def velocity_grid(self) -> VelocityGrid:
        box = (np.full(DIM, -self.vmax), np.full(DIM, self.vmax))
        return VelocityGrid(self.nodes, self.weights, box)

    def is_symmetric(self) -> bool:
        return bool(np.allclose(self.nodes[::-1], -self.nodes, atol=1e-14))


def collision_frequency(spec: CollisionKernelSpec, quad: VelocityQuadrature) -> tuple[np.ndarray, float]:
    """nu(v_j) = sum_{k, l} w_k B(|v_j - v_k|, omega_l) mu_k dw and min nu / (|v|+1)^alpha.

    Terms where the kernel is not finite (r = 0 for soft kernels, grazing
    directions for non-cutoff kernels) are left out.
    """
    V = quad.nodes
    nu = np.zeros(quad.size)
    for om in quad.omegas:
        diff = V[None, :, :] - V[:, None, :]              # v_k - v_j
        r = np.linalg.norm(diff, axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(r > 0, diff @ om / np.where(r > 0, r, 1.0), 0.0)
            b = spec.evaluate(r, c)
        b = np.where(np.isfinite(b), b, 0.0)
        nu += (b * quad.mu[None, :]).sum(axis=1) * quad.weight * quad.d_omega
    m1 = float(np.min(nu / (quad.speed + 1.0) ** spec.alpha))
    return nu, m1


def check_B2(spec: CollisionKernelSpec, quad: VelocityQuadrature, M2: float | None = None) -> bool:
    """Pointwise B <= M2 |v - v_*|^beta (the d = 2 form) over all grid triples."""
    M2 = spec.M2 if M2 is None else M2
    V = quad.nodes
    for om in quad.omegas:
        diff = V[None, :, :] - V[:, None, :]
        r = np.linalg.norm(diff, axis=2)
        off = r > 0
        rr = r[off]
        c = (diff[off] @ om) / rr
        with np.errstate(divide="ignore", invalid="ignore"):
            b = spec.evaluate(rr, c)
        if np.any(~np.isfinite(b)) or np.any(b > M2 * rr**spec.beta * (1 + 1e-12)):
            return False
    return True


# interpolation stencils on the node grid, returning (node indices, weights)

def _stencil(quad: VelocityQuadrature, P: np.ndarray, order: str):
    n = quad.n_axis
    idx = (P + quad.vmax - 0.5 * quad.h) / quad.h       # fractional node index
    inside = np.all((idx >= -1e-12) & (idx <= n - 1 + 1e-12), axis=1)
    if order == "bilinear":
        i0 = np.clip(np.floor(idx), 0, n - 2).astype(int)
        t = idx - i0
        w1 = [1.0 - t, t]
        offs = (0, 1)
    elif order == "biquadratic":
        i0 = np.clip(np.rint(idx), 1, n - 2).astype(int)
        t = idx - i0
        w1 = [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)]
        offs = (-1, 0, 1)
    else:
        raise ValueError(f"unknown interpolation {order!r}")
    cols, wts = [], []
    for a, oa in enumerate(offs):
        for b, ob in enumerate(offs):
            cols.append((i0[:, 0] + oa) * n + (i0[:, 1] + ob))
            wts.append(w1[a][:, 0] * w1[b][:, 1])
    return np.stack(cols, axis=1), np.stack(wts, axis=1), inside


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    quad: VelocityQuadrature
    spec: CollisionKernelSpec
    Q: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)
    dropped_fraction: float = 0.0
    interpolation: str = "bilinear"

    @property
    def L(self) -> np.ndarray:
        return -self.Q / self.quad.weight

    @cached_property
    def eig(self):
        w, U = np.linalg.eigh(self.Q)
        return w, U

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eig[0][0])

    def dirichlet(self, f: np.ndarray) -> np.ndarray:
        """D(f) for velocity vectors along the first axis (complex allowed)."""
        f = np.asarray(f)
        return np.real(np.einsum("j...,jk,k...->...", f.conj(), self.Q, f))

    def rayleigh(self, f: np.ndarray) -> float:
        """D(f) / ||f||^2 in the weighted discrete inner product."""
        f = np.asarray(f)
        return float(self.dirichlet(f) / (self.quad.weight * np.sum(np.abs(f) ** 2)))

    def propagator(self, dt: float) -> np.ndarray:
        """exp(dt L) in the node basis."""
        w, U = self.eig
        lam = -np.clip(w, 0.0, None) / self.quad.weight
        return (U * np.exp(dt * lam)) @ U.T

    def spectral_gap(self, tol: float = 1e-8) -> float:
        """Smallest eigenvalue of -L above tol times the largest one."""
        lam = np.clip(self.eig[0], 0.0, None) / self.quad.weight
        pos = lam[lam > tol * lam[-1]]
        return float(pos[0]) if pos.size else 0.0


def _assemble_chunk(spec, quad, om, order, masks):
    V = quad.nodes
    n = quad.size
    j, k = np.triu_indices(n, 1)                  # (j,k) and (k,j) give the same bracket
    diff = V[k] - V[j]
    r = np.linalg.norm(diff, axis=1)
    proj = diff @ om
    c = proj / r
    live = np.abs(c) > TRIVIAL
    j, k, r, c, proj = j[live], k[live], r[live], c[live], proj[live]
    vp = V[j] + proj[:, None] * om
    vsp = V[k] - proj[:, None] * om
    b = spec.evaluate(r, c)
    cols1, w1, in1 = _stencil(quad, vp, order)
    cols2, w2, in2 = _stencil(quad, vsp, order)
    # factor 2 for the mirrored ordered pair
    base = 2.0 * quad.weight**2 * quad.d_omega * b
    e2 = quad.speed**2
    mass = base * quad.mu[j] * quad.mu[k]
    keep = in1 & in2 & np.isfinite(base)
    dropped = float(np.sum(mass[~keep & np.isfinite(mass)]))
    total = float(np.sum(mass[np.isfinite(mass)]))
    j, k, base = j[keep], k[keep], base[keep]
    cols1, w1, cols2, w2 = cols1[keep], w1[keep], cols2[keep], w2[keep]
    m = j.size
    # row entries for f: sqrt(c/4) * stencil weight * mu_i^(-1/2),
    # with sqrt(mu_j mu_k / mu_i) = (2 pi)^(-1/2) exp(-(|v_j|^2 + |v_k|^2 - |v_i|^2) / 4)
    ejk = e2[j] + e2[k]
    amp = 0.5 * np.sqrt(base)
    cols = np.concatenate([j[:, None], k[:, None], cols1, cols2], axis=1)
    scale = np.exp(-(ejk[:, None] - e2[cols]) / 4.0) / math.sqrt(2 * np.pi)
    sign = np.concatenate([-np.ones((m, 2)), w1, w2], axis=1)
    vals = amp[:, None] * sign * scale
    out = []
    for mask in masks:
        sel = mask(quad, j, k) if mask is not None else np.ones(m, dtype=bool)
        R = sp.csr_matrix((vals[sel].ravel(), (np.repeat(np.arange(int(sel.sum())),
                           cols.shape[1]), cols[sel].ravel())), shape=(int(sel.sum()), n))
        out.append((R.T @ R).toarray())
    return out, dropped, total


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("KINETIC_RELAX_THREADS", "1")))
    except ValueError:
        return 1


def _assemble(spec, quad, order, masks):
    n = quad.size
    Qs = [np.zeros((n, n)) for _ in masks]
    dropped = total = 0.0

    def work(om):
        return _assemble_chunk(spec, quad, om, order, masks)

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, quad.omegas))
    else:
        parts = [work(om) for om in quad.omegas]
    for qs, d, t in parts:
        for acc, q in zip(Qs, qs):
            acc += q
        dropped += d
        total += t
    Qs = [0.5 * (q + q.T) for q in Qs]
    return Qs, (dropped / total if total > 0 else 0.0)


def assemble_dirichlet_form(spec: CollisionKernelSpec, quad: VelocityQuadrature,
                            interpolation: str = "bilinear") -> LinearizedOperator:
    """Assemble Q with D(f) = f^T Q f and wrap it as a linearized operator.

    Collisions whose post-collision velocities leave the node box are
    dropped; ``dropped_fraction`` is their share of sum c_jkl.
    """
    (Q,), frac = _assemble(spec, quad, interpolation, [None])
    nu, _ = collision_frequency(spec, quad)
    return LinearizedOperator(quad, spec, Q, nu, frac, interpolation)


# collision invariants

def kernel_basis(quad: VelocityQuadrature) -> np.ndarray:
    """Columns sqrt(mu), v1 sqrt(mu), v2 sqrt(mu), |v|^2 sqrt(mu)."""
    s = np.sqrt(quad.mu)
    V = quad.nodes
    return np.stack([s, V[:, 0] * s, V[:, 1] * s, quad.speed**2 * s], axis=1)


def _projector(quad: VelocityQuadrature) -> np.ndarray:
    q, _ = np.linalg.qr(kernel_basis(quad) * quad.h)
    return q / quad.h


def _project_array(X: np.ndarray, quad: VelocityQuadrature) -> np.ndarray:
    Phi = _projector(quad)
    flat = X.reshape(quad.size, -1)
    coef = quad.weight * (Phi.T @ flat)
    return (flat - Phi @ coef).reshape(X.shape)


def kernel_projection(f, quad: VelocityQuadrature):
    """Orthogonal projection off the collision invariants, mode by mode.

    Accepts a velocity vector, an (n_v, ...) array or a KineticState.
    """
    if isinstance(f, KineticState):
        return f.with_coeffs(_project_array(f.coeffs, quad))
    return _project_array(np.asarray(f), quad)


def invariant_moments(f, quad: VelocityQuadrature) -> np.ndarray:
    X = f.coeffs if isinstance(f, KineticState) else np.asarray(f)
    flat = X.reshape(quad.size, -1)
    return quad.weight * (kernel_basis(quad).T @ flat)


# evolution

def weight_column(order: float) -> str:
    return f"weight_{order:g}"


def weighted_norm(f, quad: VelocityQuadrature, order: float) -> float:
    """int int (|v|+1)^order |f|^2 dx dv (Parseval in x)."""
    X = f.coeffs if isinstance(f, KineticState) else np.asarray(f)
    flat = np.abs(X.reshape(quad.size, -1)) ** 2
    return float(quad.weight * ((quad.speed + 1.0) ** order @ flat.sum(axis=1)))


def _check_projected(f0: KineticState, quad, tol=1e-10) -> KineticState:
    mom = invariant_moments(f0, quad)
    scale = math.sqrt(max(weighted_norm(f0, quad, 0.0), 1e-300))
    if np.max(np.abs(mom), initial=0.0) > tol * scale:
        warnings.warn("initial datum has collision-invariant components; projecting",
                      RuntimeWarning, stacklevel=3)
        return kernel_projection(f0, quad)
    return f0


def evolve_boltzmann(f0: KineticState, op: LinearizedOperator, T: float, dt: float,
                     sample_every: int = 1, weight_orders=(), project: bool = True):
    """Strang splitting of exact free transport and exact collision steps.

    Returns an EnergyTrace of H_f = ||f||^2 with dissipation D(f) at the
    sample times. Extra columns: ``dissipated``, the cumulative exact
    energy removed by the collision substeps (2 int D along each substep,
    in closed form in the eigenbasis of Q), and one weighted norm per
    entry of ``weight_orders``.
    """
    quad = op.quad
    if f0.vgrid.size != quad.size or f0.dim != DIM:
        raise ValueError("state must live on the quadrature nodes over T^2")
    if dt <= 0 or T <= 0:
        raise ValueError("need dt > 0 and T > 0")
    if project:
        f0 = _check_projected(f0, quad)
    steps = int(round(T / dt))
    dt = T / steps
    w, U = op.eig
    lam = np.clip(w, 0.0, None)
    decay = np.exp(-dt * lam / quad.weight)
    lost = quad.weight * (1.0 - decay**2)      # energy removed per unit |y|^2
    E = (U * decay) @ U.T
    half = transport_phase(DIM, f0.cutoff, quad.nodes, dt / 2).reshape(quad.size, -1)
    shape = f0.coeffs.shape
    X = f0.coeffs.reshape(quad.size, -1).copy()
    orders = tuple(weight_orders)
    rec = {"t": [], "H": [], "D": [], "dissipated": []}
    for o in orders:
        rec[weight_column(o)] = []
    cum = 0.0

    def record(t):
        rec["t"].append(t)
        rec["H"].append(float(quad.weight * np.sum(np.abs(X) ** 2)))
        rec["D"].append(float(np.sum(op.dirichlet(X))))
        rec["dissipated"].append(cum)
        for o in orders:
            rec[weight_column(o)].append(weighted_norm(X, quad, o))

    record(0.0)
    for i in range(1, steps + 1):
        X *= half
        Y = U.T @ X
        cum += float(np.sum(lost @ np.abs(Y) ** 2))
        X = E @ X
        X *= half
        if i % sample_every == 0 or i == steps:
            if not np.all(np.isfinite(X)):
                raise FloatingPointError(f"non-finite state at t={i * dt}")
            record(i * dt)
    extra = {name: np.array(rec[name]) for name in rec if name not in ("t", "H", "D")}
    tr = EnergyTrace(np.array(rec["t"]), np.array(rec["H"]), np.array(rec["D"]), extra)
    return tr, f0.with_coeffs(X.reshape(shape))


def observability_lhs_boltzmann(op: LinearizedOperator, f0: KineticState, T: float,
                                nt: int | None = None, alpha: float | None = None):
    """(lhs, C_emp) with lhs = int_0^T D(g(t)) dt along g = f0(x - vt, v).

    Time integration is exact: for mode n the pair (j, k) carries
    int_0^T exp(i 2 pi n.(v_j - v_k) t) dt. With ``nt`` a trapezoid rule
    on nt nodes is used instead. C_emp divides by the
    (|v|+1)^alpha-weighted norm of f0.
    """
    quad = op.quad
    alpha = op.spec.alpha if alpha is None else alpha
    X0 = f0.coeffs.reshape(quad.size, -1)
    n = wavenumbers(DIM, f0.cutoff).reshape(DIM, -1)
    freq = quad.nodes @ n                                  # (n_v, modes)
    if nt is None:
        lhs = 0.0
        for m in range(X0.shape[1]):
            a = X0[:, m]
            if not np.any(a):
                continue
            om = 2 * np.pi * (freq[:, m][:, None] - freq[:, m][None, :])
            small = np.abs(om) < 1e-12
            safe = np.where(small, 1.0, om)
            W = np.where(small, T, (np.exp(1j * safe * T) - 1.0) / (1j * safe))
            lhs += float(np.real(a.conj() @ ((op.Q * W) @ a)))
    else:
        t = np.linspace(0.0, T, nt)
        vals = np.array([np.sum(op.dirichlet(X0 * np.exp(-2j * np.pi * freq * s))) for s in t])
        lhs = float(np.trapezoid(vals, t))
    wn = weighted_norm(f0, quad, alpha)
    if wn <= 1e-300:
        raise ValueError("zero weighted norm: C_emp undefined")
    return lhs, lhs / wn


# epsilon split

@dataclass(frozen=True, eq=False)
class EpsilonSplit:
    eps: float
    Q1: np.ndarray = field(repr=False)
    Q2: np.ndarray = field(repr=False)
    C1: float
    C2: float
    split_error: float


def _gen_max(A: np.ndarray, Wdiag: np.ndarray) -> float:
    """Largest generalized eigenvalue of A x = lam diag(W) x."""
    s = 1.0 / np.sqrt(Wdiag)
    return float(np.linalg.eigvalsh(s[:, None] * A * s[None, :])[-1])


def epsilon_split(op: LinearizedOperator, eps: float) -> EpsilonSplit:
    """Split the kernel by I_eps = chi(|v - v_*| <= 1/eps).

    C1 = ||L1^(1/2)|| on L^2; C2 = ||L2^(1/2)|| from L^2((|v|+1)^alpha)
    to L^2, both from the assembled forms. ``split_error`` is
    max |Q - Q1 - Q2| relative to max |Q|.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    quad = op.quad
    V = quad.nodes
    cut = 1.0 / eps

    def near(q, j, k):
        return np.linalg.norm(V[j] - V[k], axis=1) <= cut

    def far(q, j, k):
        return ~near(q, j, k)

    (Q1, Q2), _ = _assemble(op.spec, quad, op.interpolation, [near, far])
    err = float(np.max(np.abs(op.Q - Q1 - Q2)) / max(np.max(np.abs(op.Q)), 1e-300))
    c1 = math.sqrt(max(np.linalg.eigvalsh(Q1)[-1], 0.0) / quad.weight)
    wdiag = quad.weight * (quad.speed + 1.0) ** op.spec.alpha
    c2 = math.sqrt(max(_gen_max(Q2, wdiag), 0.0))
    return EpsilonSplit(eps, Q1, Q2, c1, c2, err)


# soft potentials

@dataclass(frozen=True)
class SoftDecayReport:
    holder_ok: bool
    growth_ok: bool
    recurrence_ok: bool
    envelope_ok: bool
    order: float
    growth_constant: float
    C: float
    M: float
    envelope: float
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.holder_ok and self.growth_ok and self.recurrence_ok and self.envelope_ok


def soft_decay_iteration(trace: EnergyTrace, T: float, k1: float, k2: float, k3: float,
                         alpha: float) -> SoftDecayReport:
    """Check the soft-potential iteration on samples taken at t = kT.

    ``trace`` must carry the weight columns for ``alpha`` and ``k2`` (see
    :func:`evolve_boltzmann`), sampled exactly at multiples of T.
    (i) Hoelder: W_alpha^k1 W_k2^k3 >= H^(k1+k3) at each sample.
    (ii) growth: C_g = max_{k>=1} W_k2(kT) / (kT W_k2(0)) is finite.
    (iii) E_k = H(kT)/k obeys E_{k+1} <= E_k - C E_{k+1}^(1+k3/k1) with
    fitted C > 0, checked by :func:`ammari_bound`; p = k1/k3.
    The envelope M_e = max over the first half of H t^p must bound the
    second half.
    """
    for name, val in (("k1", k1), ("k2", k2), ("k3", k3)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    if not alpha * k1 + k2 * k3 > 0:
        raise ValueError(f"constraint alpha k1 + k2 k3 > 0 fails ({alpha * k1 + k2 * k3!r})")
    t = trace.times
    ks = t / T
    if np.max(np.abs(ks - np.rint(ks))) > 1e-9 or ks[0] != 0 or t.size < 4:
        raise ValueError("trace must be sampled at t = kT, k = 0, 1, ..., with at least 4 samples")
    p = k1 / k3
    zeta = k3 / k1 - 1.0
    H = trace.values
    if np.max(H) <= 1e-300:
        return SoftDecayReport(True, True, True, True, p, 0.0, math.nan, 0.0, 0.0, "equilibrium")
    try:
        Wa = trace.extra[weight_column(alpha)]
        Wk = trace.extra[weight_column(k2)]
    except KeyError as exc:
        raise ValueError(f"trace lacks weight column {exc}") from None
    lhs = k1 * np.log(Wa) + k3 * np.log(Wk)
    rhs = (k1 + k3) * np.log(H)
    holder_ok = bool(np.all(lhs >= rhs - 1e-10 * np.abs(rhs).clip(1.0)))
    k = np.rint(ks).astype(int)
    growth = Wk[1:] / (k[1:] * T * Wk[0])
    cg = float(np.max(growth))
    growth_ok = bool(np.isfinite(cg))
    E = H[1:] / k[1:]
    drops = (E[:-1] - E[1:]) / E[1:] ** (2.0 + zeta)
    C = float(np.min(drops))
    msg = ""
    M = math.inf
    rec_ok = C > 0
    if rec_ok:
        try:
            M = ammari_bound(E, C, zeta)
        except RecurrenceViolation as exc:
            rec_ok, msg = False, str(exc)
    else:
        msg = "scaled energy fails to decrease"
    half = max(2, t.size // 2)
    first = slice(1, half)
    env = float(np.max(H[first] * t[first] ** p))
    env_ok = bool(np.all(H[half:] <= env * t[half:] ** (-p) * (1 + 1e-12)))
    return SoftDecayReport(holder_ok, growth_ok, rec_ok, env_ok, p, cg, C, M, env, msg)


def tail_slope(trace: EnergyTrace, start_fraction: float = 0.5) -> float:
    """Log-log slope of H over the last part of the horizon."""
    lo = trace.times[0] + start_fraction * (trace.times[-1] - trace.times[0])
    return -fit_polynomial(trace, (lo, trace.times[-1])).rate
