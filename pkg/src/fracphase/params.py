"""Fractional parameters, epsilon scalings and double-well potentials."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "FracParams",
    "Scalings",
    "DoubleWell",
    "make_params",
    "scalings",
    "quartic_well",
    "tabulated_well",
    "load_well",
    "primitive_W",
    "sigma_constant",
]

PRIMITIVE_NODES = 4096
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(6)


@dataclass(frozen=True)
class FracParams:
    """Exponent ``a`` of the weight ``y**a``; the order ``s = (1 - a)/2`` is derived."""

    a: float

    @property
    def s(self) -> float:
        return (1.0 - self.a) / 2.0

    @classmethod
    def from_s(cls, s: float) -> "FracParams":
        return make_params(1.0 - 2.0 * s)


def make_params(a: float) -> FracParams:
    a = float(a)
    if not (-1.0 < a < 0.0):
        raise ValueError(f"exponent a={a} outside the admissible interval (-1, 0)")
    return FracParams(a)


@dataclass(frozen=True)
class Scalings:
    eps: float
    lambda_big: float
    lambda_small: float


def scalings(p: FracParams, eps: float) -> Scalings:
    """Transition-layer width ``eps**((1-a)/(-a))`` and its reciprocal."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    big = float(eps) ** ((1.0 - p.a) / (-p.a))
    if big == 0.0 or not np.isfinite(big):
        raise ValueError(f"layer width for eps={eps}, a={p.a} is outside floating point range")
    return Scalings(eps=float(eps), lambda_big=big, lambda_small=1.0 / big)


@dataclass(frozen=True, eq=False)
class DoubleWell:
    """Nonnegative potential vanishing exactly at ``lo < hi``.

    ``domain`` bounds the points where ``eval`` may be called; builtin wells
    accept the whole real line.
    """

    lo: float
    hi: float
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    kind: str = "builtin-quartic"
    domain: tuple[float, float] = (-np.inf, np.inf)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"wells must satisfy lo < hi, got {self.lo}, {self.hi}")
        if not (self.domain[0] <= self.lo and self.hi <= self.domain[1]):
            raise ValueError("wells must lie inside the evaluation domain")
        ends = np.asarray(self(np.array([self.lo, self.hi])))
        if np.max(np.abs(ends)) > 1e-12:
            raise ValueError(f"potential does not vanish at the wells: {ends}")
        t = np.linspace(self.lo, self.hi, 513)[1:-1]
        if np.any(np.asarray(self(t)) <= 0):
            raise ValueError("potential must be positive strictly between the wells")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.domain[0]) or np.any(t > self.domain[1]):
            raise ValueError(f"argument outside the evaluation domain {self.domain}")
        return self.eval(t)

    def relabel(self, lo: float, hi: float) -> "DoubleWell":
        """Affine copy with wells moved to ``(lo, hi)``; values are unchanged in shape."""
        scale = (self.hi - self.lo) / (hi - lo)

        def back(t):
            return self.lo + (np.asarray(t, dtype=float) - lo) * scale

        d0, d1 = self.domain
        dom = (lo + (d0 - self.lo) / scale, lo + (d1 - self.lo) / scale)
        return DoubleWell(
            lo,
            hi,
            lambda t: self.eval(back(t)),
            lambda t: self.deriv(back(t)) * scale,
            kind=self.kind,
            domain=dom,
            meta=dict(self.meta),
        )


def quartic_well(lo: float = -1.0, hi: float = 1.0, c: float = 0.25) -> DoubleWell:
    """``W(t) = c ((t - lo)(t - hi))**2``; the default is ``(1 - t**2)**2 / 4``."""

    def ev(t):
        return c * ((t - lo) * (t - hi)) ** 2

    def dv(t):
        q = (t - lo) * (t - hi)
        return 2.0 * c * q * (2.0 * t - lo - hi)

    return DoubleWell(lo, hi, ev, dv, kind="builtin-quartic", meta={"c": c})


def tabulated_well(t, values, lo: float, hi: float) -> DoubleWell:
    """Potential given by samples, linearly interpolated; wells must be supplied."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != values.shape or t.size < 2:
        raise ValueError("tabulated potential needs two equal-length 1D arrays")
    if np.any(np.diff(t) <= 0):
        raise ValueError("tabulation nodes must be strictly increasing")
    if np.any(values < 0):
        raise ValueError("tabulated potential must be nonnegative")
    slopes = np.diff(values) / np.diff(t)

    def ev(x):
        return np.interp(x, t, values)

    def dv(x):
        idx = np.clip(np.searchsorted(t, x, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    return DoubleWell(lo, hi, ev, dv, kind="user-tabulated", domain=(t[0], t[-1]))


def load_well(path, lo: float, hi: float) -> DoubleWell:
    """Read a two-column text file of ``t W(t)`` rows (``#`` comments allowed)."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns, found {data.shape[1]}")
    return tabulated_well(data[:, 0], data[:, 1], lo, hi)


@lru_cache(maxsize=64)
def _primitive_table(w: DoubleWell, nodes: int = PRIMITIVE_NODES):
    grid = np.linspace(w.lo, w.hi, nodes)
    half = 0.5 * np.diff(grid)
    mid = 0.5 * (grid[1:] + grid[:-1])
    pts = mid[:, None] + half[:, None] * _GAUSS_X[None, :]
    vals = 2.0 * np.sqrt(np.maximum(w(pts), 0.0))
    cells = half * (vals @ _GAUSS_W)
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    # exact slopes 2 sqrt(W), limited so that the cubic stays monotone
    slopes = 2.0 * np.sqrt(np.maximum(w(grid), 0.0))
    secant = np.diff(cum) / np.diff(grid)
    cap = 3.0 * np.minimum(np.concatenate([secant, secant[-1:]]), np.concatenate([secant[:1], secant]))
    slopes = np.minimum(slopes, cap)
    return grid, cum, CubicHermiteSpline(grid, cum, slopes)


def primitive_W(w: DoubleWell, t):
    """Primitive of ``2 sqrt(W)`` vanishing at the lower well, defined on ``[lo, hi]``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < w.lo - 1e-12) or np.any(t > w.hi + 1e-12):
        raise ValueError(f"primitive is defined on [{w.lo}, {w.hi}] only")
    _, _, interp = _primitive_table(w)
    out = interp(np.clip(t, w.lo, w.hi))
    return float(out) if out.ndim == 0 else out


def sigma_constant(w: DoubleWell) -> float:
    """Surface tension ``2 * int_lo^hi sqrt(W)``."""
    _, cum, _ = _primitive_table(w)
    return float(cum[-1])
