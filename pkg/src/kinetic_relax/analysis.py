"""Decay-rate fits and sequence bounds shared by all models.

Traces always hold energies (squared norms). An exponential fit of an
energy gives the energy rate; the norm rate is half of it and is reported
alongside.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "EnergyTrace",
    "RateFit",
    "fit_exponential",
    "fit_polynomial",
    "window_decrement",
    "window_integrals",
    "ammari_bound",
    "ammari_sequence",
    "RecurrenceViolation",
]

DEFAULT_SKIP = 0.2


@dataclass(frozen=True)
class EnergyTrace:
    """Energy time series with optional dissipation samples."""

    times: np.ndarray
    values: np.ndarray
    dissipation: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be equal-length 1-d arrays")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("energies must be nonnegative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if self.dissipation is not None:
            d = np.asarray(self.dissipation, dtype=float)
            if d.shape != t.shape:
                raise ValueError("dissipation must match times")
            object.__setattr__(self, "dissipation", d)

    def to_csv(self, energy_name: str = "energy") -> str:
        """CSV text with a header row; extra columns follow dissipation."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        cols = ["t", energy_name]
        data = [self.times, self.values]
        if self.dissipation is not None:
            cols.append("dissipation")
            data.append(self.dissipation)
        for name, col in self.extra.items():
            cols.append(name)
            data.append(np.asarray(col, dtype=float))
        w.writerow(cols)
        for row in zip(*data):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


@dataclass(frozen=True)
class RateFit:
    model: str
    rate: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    norm_rate: float | None = None


def _window_mask(tr: EnergyTrace, window):
    t = tr.times
    if window is None:
        lo = t[0] + DEFAULT_SKIP * (t[-1] - t[0])
        window = (lo, t[-1])
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    # stop at the first nonpositive value inside the window
    idx = np.flatnonzero(mask)
    bad = idx[tr.values[idx] <= 0]
    if bad.size:
        mask &= np.arange(t.size) < bad[0]
    if np.count_nonzero(mask) < 2:
        raise ValueError(f"fit window {window} holds fewer than two positive samples")
    return mask, (float(lo), float(hi))


def _linfit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-300 else 0.0
    else:
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    return float(slope), float(intercept), r2


def fit_exponential(tr: EnergyTrace, window=None) -> RateFit:
    """Least-squares fit of log E = intercept - rate * t.

    ``window`` is (t_lo, t_hi); by default the first 20% of the horizon
    is dropped as transient.
    """
    mask, win = _window_mask(tr, window)
    slope, icpt, r2 = _linfit(tr.times[mask], np.log(tr.values[mask]))
    return RateFit("exponential", -slope, icpt, r2, win, norm_rate=-slope / 2)


def fit_polynomial(tr: EnergyTrace, window=None) -> RateFit:
    """Least-squares fit of log E = intercept - rate * log(1 + t)."""
    mask, win = _window_mask(tr, window)
    slope, icpt, r2 = _linfit(np.log1p(tr.times[mask]), np.log(tr.values[mask]))
    return RateFit("polynomial", -slope, icpt, r2, win, norm_rate=-slope / 2)


def window_integrals(times, values, T0: float, k: int) -> np.ndarray:
    """Trapezoid integrals of a sampled series over [pT0, (p+1)T0]."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times[0] > 1e-12 * max(1.0, T0) or times[-1] < k * T0 * (1 - 1e-12):
        raise ValueError(f"series does not cover [0, {k * T0}]")
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (values[1:] + values[:-1]))])
    edges = np.interp(T0 * np.arange(k + 1), times, cum)
    return np.diff(edges)


def window_decrement(times, values, T0: float, k: int) -> int:
    """Index p of a window [pT0, (p+1)T0] whose integral is at most the mean.

    The smallest window integral is selected, so ties resolve to the
    earliest window. Pigeonhole guarantees the selected window integral
    does not exceed total / k.
    """
    w = window_integrals(times, values, T0, k)
    lo = w.min()
    tol = 1e-12 * max(abs(lo), float(np.max(np.abs(w))))
    return int(np.flatnonzero(w <= lo + tol)[0])


class RecurrenceViolation(ValueError):
    """Sequence breaks E_{k+1} <= E_k - C E_{k+1}^(2+zeta) at index k."""

    def __init__(self, k: int, lhs: float, rhs: float):
        super().__init__(f"recurrence violated at k={k}: E_(k+1)={lhs!r} > {rhs!r}")
        self.k = k


def ammari_bound(seq, C: float, zeta: float, rtol: float = 1e-12) -> float:
    """Smallest M with E_k <= M / (k+1)^(1/(1+zeta)) over the sequence.

    Every consecutive pair must satisfy E_{k+1} <= E_k - C E_{k+1}^(2+zeta)
    (up to ``rtol`` relative slack); the first failing index is reported.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if zeta <= -1:
        raise ValueError("zeta must exceed -1")
    e = np.asarray(seq, dtype=float)
    if np.any(e <= 0):
        raise ValueError("sequence must be positive")
    for k in range(e.size - 1):
        rhs = e[k] - C * e[k + 1] ** (2 + zeta)
        if e[k + 1] > rhs + rtol * e[k]:
            raise RecurrenceViolation(k, float(e[k + 1]), float(rhs))
    k = np.arange(e.size)
    return float(np.max(e * (k + 1.0) ** (1.0 / (1.0 + zeta))))


def ammari_sequence(e0: float, C: float, zeta: float, n: int) -> np.ndarray:
    """Sequence obeying the recurrence with equality, solved term by term."""
    out = np.empty(n)
    out[0] = e0
    for k in range(1, n):
        prev = out[k - 1]
        out[k] = brentq(lambda x: x + C * x ** (2 + zeta) - prev, 0.0, prev,
                        xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return out
