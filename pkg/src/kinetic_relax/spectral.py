"""Truncated Fourier representation of periodic fields on the torus.

Fields on T^d = (R/Z)^d are stored as coefficients c_n of the basis
exp(i 2 pi n.x) for all integer n with max-norm at most the cutoff N.
Coefficient n lives at array index n + N along every axis, so the array
has shape (2N+1,)*d.

The collocation grid is the uniform (2N+1)^d grid x_j = j / (2N+1), on
which the discrete transform is exactly invertible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "TorusSpectrum",
    "VelocityGrid",
    "KineticState",
    "wavenumbers",
    "grid_points",
    "to_spectrum",
    "to_samples",
    "resample",
    "batch_samples",
    "batch_spectrum",
    "advect",
    "transport_phase",
    "bessel_multiplier",
    "bessel_symbol",
    "l2_norm",
    "sobolev_norm",
    "multiply",
    "velocity_average",
    "uniform_velocity_grid",
]


def wavenumbers(dim: int, cutoff: int) -> np.ndarray:
    """Integer wavenumber array of shape (dim, 2N+1, ..., 2N+1)."""
    axis = np.arange(-cutoff, cutoff + 1)
    return np.array(np.meshgrid(*([axis] * dim), indexing="ij"))


def grid_points(dim: int, cutoff: int) -> np.ndarray:
    """Collocation points of the (2N+1)^d grid, shape (dim, 2N+1, ...)."""
    m = 2 * cutoff + 1
    axis = np.arange(m) / m
    return np.array(np.meshgrid(*([axis] * dim), indexing="ij"))


def bessel_symbol(dim: int, cutoff: int, order: float) -> np.ndarray:
    """Symbol (1 + 4 pi^2 |n|^2)^(-order/2) of the Bessel potential."""
    n = wavenumbers(dim, cutoff)
    return (1.0 + 4.0 * np.pi**2 * np.sum(n**2, axis=0)) ** (-0.5 * order)


def _cutoff_from_shape(shape: Sequence[int]) -> int:
    m = shape[0]
    if any(s != m for s in shape) or m % 2 == 0:
        raise ValueError(
            f"expected an odd cubic grid (2N+1)^d, got shape {tuple(shape)}"
        )
    return (m - 1) // 2


@dataclass(frozen=True)
class TorusSpectrum:
    """Fourier coefficients of a field on T^d, truncated at max-norm N."""

    dim: int
    cutoff: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        expected = (2 * self.cutoff + 1,) * self.dim
        if c.shape != expected:
            raise ValueError(f"coeffs shape {c.shape} != {expected}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, dim: int, cutoff: int) -> "TorusSpectrum":
        return cls(dim, cutoff, np.zeros((2 * cutoff + 1,) * dim, dtype=complex))

    @classmethod
    def from_function(cls, func, dim: int, cutoff: int) -> "TorusSpectrum":
        """Interpolate ``func(*x)`` on the collocation grid."""
        x = grid_points(dim, cutoff)
        return to_spectrum(np.asarray(func(*x), dtype=float), cutoff)

    def mode(self, *n: int) -> complex:
        idx = tuple(k + self.cutoff for k in n)
        return complex(self.coeffs[idx])

    @property
    def mean(self) -> complex:
        return self.mode(*([0] * self.dim))

    def samples(self, grid_cutoff: int | None = None) -> np.ndarray:
        """Values on the (2K+1)^d grid, K = grid_cutoff (default N)."""
        k = self.cutoff if grid_cutoff is None else grid_cutoff
        return to_samples(resample(self, k).coeffs)

    def is_real(self, tol: float = 1e-12) -> bool:
        flipped = self.coeffs[(slice(None, None, -1),) * self.dim]
        scale = max(1.0, float(np.max(np.abs(self.coeffs), initial=0.0)))
        return bool(np.max(np.abs(flipped - self.coeffs.conj())) <= tol * scale)

    def __add__(self, other: "TorusSpectrum") -> "TorusSpectrum":
        return TorusSpectrum(self.dim, self.cutoff, self.coeffs + other.coeffs)

    def __sub__(self, other: "TorusSpectrum") -> "TorusSpectrum":
        return TorusSpectrum(self.dim, self.cutoff, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "TorusSpectrum":
        return TorusSpectrum(self.dim, self.cutoff, self.coeffs * scalar)

    __rmul__ = __mul__


def to_spectrum(samples, cutoff: int | None = None) -> TorusSpectrum:
    """Coefficients of the trigonometric interpolant of grid samples.

    ``samples`` must live on the uniform (2N+1)^d grid. If ``cutoff`` is
    given the sample count is checked against it.
    """
    samples = np.asarray(samples)
    n = _cutoff_from_shape(samples.shape)
    if cutoff is not None and n != cutoff:
        raise ValueError(
            f"{samples.shape} samples do not match cutoff {cutoff} "
            f"(need {(2 * cutoff + 1,) * samples.ndim})"
        )
    c = np.fft.fftshift(np.fft.fftn(samples)) / samples.size
    return TorusSpectrum(samples.ndim, n, c)


def to_samples(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_spectrum` on a raw coefficient array."""
    return np.fft.ifftn(np.fft.ifftshift(coeffs)) * coeffs.size


def batch_samples(coeffs: np.ndarray, dim: int, grid_cutoff: int | None = None) -> np.ndarray:
    """Grid values for a stack of spectra along the leading axes.

    The last ``dim`` axes hold coefficients; they are padded to
    ``grid_cutoff`` first when given.
    """
    axes = tuple(range(coeffs.ndim - dim, coeffs.ndim))
    n = (coeffs.shape[-1] - 1) // 2
    if grid_cutoff is not None:
        coeffs = _pad(coeffs, n, grid_cutoff, axes)
    m = coeffs.shape[-1]
    return np.fft.ifftn(np.fft.ifftshift(coeffs, axes=axes), axes=axes) * m**dim


def batch_spectrum(samples: np.ndarray, dim: int, cutoff: int | None = None) -> np.ndarray:
    """Coefficients for a stack of grid samples, optionally truncated."""
    axes = tuple(range(samples.ndim - dim, samples.ndim))
    m = samples.shape[-1]
    c = np.fft.fftshift(np.fft.fftn(samples, axes=axes), axes=axes) / m**dim
    if cutoff is not None:
        c = _pad(c, (m - 1) // 2, cutoff, axes)
    return c


def _pad(coeffs: np.ndarray, cutoff: int, new_cutoff: int, axes) -> np.ndarray:
    if new_cutoff == cutoff:
        return coeffs
    if new_cutoff > cutoff:
        p = new_cutoff - cutoff
        width = [(0, 0)] * coeffs.ndim
        for ax in axes:
            width[ax] = (p, p)
        return np.pad(coeffs, width)
    p = cutoff - new_cutoff
    sl = [slice(None)] * coeffs.ndim
    for ax in axes:
        sl[ax] = slice(p, coeffs.shape[ax] - p)
    return coeffs[tuple(sl)]


def resample(s: TorusSpectrum, new_cutoff: int) -> TorusSpectrum:
    """Zero-pad or truncate a spectrum to a new cutoff."""
    axes = tuple(range(s.dim))
    return TorusSpectrum(s.dim, new_cutoff, _pad(s.coeffs, s.cutoff, new_cutoff, axes))


def advect(s: TorusSpectrum, v, t: float) -> TorusSpectrum:
    """Exact free transport x -> x - v t: c_n *= exp(-i 2 pi n.v t)."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size != s.dim:
        raise ValueError(f"velocity has {v.size} components, field is {s.dim}-d")
    n = wavenumbers(s.dim, s.cutoff)
    phase = np.tensordot(v, n, axes=1) * t
    return TorusSpectrum(s.dim, s.cutoff, s.coeffs * np.exp(-2j * np.pi * phase))


def transport_phase(dim: int, cutoff: int, nodes: np.ndarray, t: float) -> np.ndarray:
    """Free-transport factors exp(-i 2 pi n.v_j t), shape (n_v, 2N+1, ...)."""
    n = wavenumbers(dim, cutoff)
    nodes = np.asarray(nodes, dtype=float).reshape(-1, dim)
    return np.exp(-2j * np.pi * t * np.tensordot(nodes, n, axes=1))


def bessel_multiplier(s: TorusSpectrum, order: float) -> TorusSpectrum:
    """Apply (1 - Laplacian)^(-order/2). Negative order raises regularity."""
    return TorusSpectrum(
        s.dim, s.cutoff, s.coeffs * bessel_symbol(s.dim, s.cutoff, order)
    )


def l2_norm(s: TorusSpectrum) -> float:
    """L2(T^d) norm via Parseval."""
    return float(np.sqrt(np.sum(np.abs(s.coeffs) ** 2)))


def sobolev_norm(s: TorusSpectrum, order: float) -> float:
    """H^order norm ||(1 - Laplacian)^(order/2) f||."""
    return l2_norm(bessel_multiplier(s, -order))


def multiply(a: TorusSpectrum, b: TorusSpectrum) -> TorusSpectrum:
    """Dealiased product, truncated to the cutoff of ``a``.

    Both factors are zero-padded to cutoff 2N before the pointwise
    product, which removes aliasing for trigonometric polynomials of
    degree at most N.
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    n = max(a.cutoff, b.cutoff)
    pad = 2 * n
    prod = a.samples(pad) * b.samples(pad)
    return resample(to_spectrum(prod), a.cutoff)


@dataclass(frozen=True)
class VelocityGrid:
    """Discrete velocity set with positive quadrature weights."""

    nodes: np.ndarray
    weights: np.ndarray
    bounds: tuple | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (nodes.shape[0],):
            raise ValueError("one weight per velocity node required")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if self.bounds is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.bounds)
            if np.any(nodes < lo - 1e-14) or np.any(nodes > hi + 1e-14):
                raise ValueError("velocity node outside declared bounding box")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))


def uniform_velocity_grid(n: int, dim: int = 1, half_width: float = 0.5) -> VelocityGrid:
    """Midpoint grid on [-a, a]^dim with n nodes per axis.

    With the default a = 1/2 the total weight is 1, the measure of V.
    Odd ``n`` puts a node at v = 0.
    """
    h = 2 * half_width / n
    axis = -half_width + h * (np.arange(n) + 0.5)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.full(nodes.shape[0], h**dim)
    box = (np.full(dim, -half_width), np.full(dim, half_width))
    return VelocityGrid(nodes, weights, box)


@dataclass(frozen=True)
class KineticState:
    """f(x, v) on a velocity grid, one spectrum per velocity node.

    ``coeffs`` has shape (n_v, 2N+1, ..., 2N+1).
    """

    vgrid: VelocityGrid
    dim: int
    cutoff: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        expected = (self.vgrid.size,) + (2 * self.cutoff + 1,) * self.dim
        if c.shape != expected:
            raise ValueError(f"coeffs shape {c.shape} != {expected}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_spectra(cls, vgrid: VelocityGrid, spectra: Sequence[TorusSpectrum]):
        dims = {s.dim for s in spectra}
        cutoffs = {s.cutoff for s in spectra}
        if len(dims) != 1 or len(cutoffs) != 1:
            raise ValueError("all per-velocity spectra must share dim and cutoff")
        if len(spectra) != vgrid.size:
            raise ValueError("one spectrum per velocity node required")
        return cls(vgrid, dims.pop(), cutoffs.pop(), np.stack([s.coeffs for s in spectra]))

    @classmethod
    def from_function(cls, func, vgrid: VelocityGrid, dim: int, cutoff: int):
        """Interpolate ``func(x, v)`` where x has shape (dim, ...) and v (dim,)."""
        x = grid_points(dim, cutoff)
        samples = np.stack([np.asarray(func(x, v), dtype=float) * np.ones(x.shape[1:])
                            for v in vgrid.nodes])
        return cls(vgrid, dim, cutoff, batch_spectrum(samples, dim))

    @property
    def per_velocity(self) -> list[TorusSpectrum]:
        return [TorusSpectrum(self.dim, self.cutoff, c) for c in self.coeffs]

    def with_coeffs(self, coeffs: np.ndarray) -> "KineticState":
        return KineticState(self.vgrid, self.dim, self.cutoff, coeffs)


def velocity_average(f: KineticState) -> TorusSpectrum:
    """Weighted velocity average f_bar(x) = sum_j w_j f(x, v_j)."""
    avg = np.tensordot(f.vgrid.weights, f.coeffs, axes=1)
    return TorusSpectrum(f.dim, f.cutoff, avg)
