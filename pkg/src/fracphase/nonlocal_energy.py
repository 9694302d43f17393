"""Gagliardo seminorms of piecewise-linear traces and the boundary functional.

The seminorm of a continuous piecewise-linear (P1) function is computed in
closed form. On the whole line, with ``v`` constant outside its grid,

    |v|^2 = 1/(s(2s-1)) int int v'(x) v'(y) |x - y|^(1-2s) dx dy,

which on a uniform grid is a Toeplitz quadratic form in the increments.
Restricting to a bounded window subtracts the interactions with the two
outer half-lines; those are one-dimensional integrals of ``(v - v_end)^2``
against ``t^(-2s)`` and are integrated exactly cell by cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.linalg import matmul_toeplitz
from scipy.special import binom

from .params import DoubleWell, FracParams, scalings

__all__ = [
    "TraceFn",
    "EnergyBreakdown",
    "GagliardoForm",
    "gagliardo_form",
    "gagliardo",
    "gagliardo_full_line",
    "g_energy",
    "monotone_rearrange",
    "truncate",
    "plateau_bound",
    "lemma42_lower_bound",
    "c_delta",
    "kappa_lower_bound",
]

_DENSE_LIMIT = 256


@dataclass(frozen=True, eq=False)
class TraceFn:
    """Samples of a trace on a uniform grid, interpolated linearly."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("TraceFn needs at least two grid nodes")
        if values.shape != grid.shape:
            raise ValueError("values and grid must have the same length")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("grid must be uniform")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, func, lo: float, hi: float, n: int) -> "TraceFn":
        x = np.linspace(lo, hi, n)
        return cls(x, np.asarray(func(x), dtype=float) * np.ones_like(x))

    @property
    def n(self) -> int:
        return self.grid.size

    @property
    def h(self) -> float:
        return (self.grid[-1] - self.grid[0]) / (self.n - 1)

    @property
    def lo(self) -> float:
        return float(self.grid[0])

    @property
    def hi(self) -> float:
        return float(self.grid[-1])

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    def with_values(self, values) -> "TraceFn":
        return TraceFn(self.grid, values)

    def restrict(self, lo: float, hi: float) -> "TraceFn":
        """Nodes falling in ``[lo, hi]`` (up to rounding)."""
        tol = 1e-9 * self.h
        keep = (self.grid >= lo - tol) & (self.grid <= hi + tol)
        return TraceFn(self.grid[keep], self.values[keep])

    def save(self, path) -> None:
        np.savetxt(path, np.column_stack([self.grid, self.values]), fmt="%.17g")

    @classmethod
    def load(cls, path) -> "TraceFn":
        data = np.loadtxt(Path(path), dtype=float, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (x, v)")
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class EnergyBreakdown:
    nonlocal_part: float
    potential: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.nonlocal_part + self.potential)

    @property
    def nonlocal_(self) -> float:
        return self.nonlocal_part


# ---------------------------------------------------------------------------
# Exact P1 quadratic form


def _toeplitz_symbol(m: int, s: float) -> np.ndarray:
    """``g(k) = second difference of |k|^p / (p(p-1))`` with ``p = 3 - 2s``."""
    p = 3.0 - 2.0 * s
    k = np.arange(m, dtype=float)
    g = np.empty(m)
    small = k < 16
    ks = k[small]
    g[small] = (np.abs(ks + 1) ** p - 2 * ks**p + np.abs(ks - 1) ** p) / (p * (p - 1))
    kb = k[~small]
    if kb.size:
        # (1+x)^p + (1-x)^p - 2 = 2 sum_j binom(p, 2j) x^(2j), x = 1/k
        x2 = kb**-2.0
        acc = np.zeros_like(kb)
        for j in range(8, 0, -1):
            acc = acc * x2 + binom(p, 2 * j)
        g[~small] = 2.0 * acc * x2 * kb**p / (p * (p - 1))
    return g


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _cell_moments(n_cells: int, h: float, offset: float, s: float):
    """``P, Q, R`` with cell ``k`` integrals of ``(1-l)^2, l(1-l), l^2`` times ``t^(-2s)``.

    Cell ``k`` covers ``t in [offset + k h, offset + (k+1) h]`` and ``l`` is the
    local coordinate. Near cells use exact moments, far cells Gauss-Legendre.
    """
    q = -2.0 * s
    a = offset + h * np.arange(n_cells)
    P = np.empty(n_cells)
    Q = np.empty(n_cells)
    R = np.empty(n_cells)
    far = a >= 8.0 * h
    if np.any(far):
        t = a[far, None] + h * _GL_X[None, :]
        wq = h * _GL_W[None, :] * t**q
        P[far] = wq @ (1 - _GL_X) ** 2
        Q[far] = wq @ (_GL_X * (1 - _GL_X))
        R[far] = wq @ _GL_X**2
    near = np.flatnonzero(~far)
    for k in near:
        ak = a[k]
        if ak <= 0.0:
            # only the far endpoint carries weight; the near value is pinned to 0
            P[k] = 0.0
            Q[k] = h ** (1 + q) * (1.0 / (2 + q) - 1.0 / (3 + q))
            R[k] = h ** (1 + q) / (3 + q)
            continue
        bk = ak + h

        def mom(m):
            e = m + q + 1.0
            return (bk**e - ak**e) / e

        M0, M1, M2 = mom(0), mom(1), mom(2)
        P[k] = (bk * bk * M0 - 2 * bk * M1 + M2) / h**2
        R[k] = (ak * ak * M0 - 2 * ak * M1 + M2) / h**2
        Q[k] = (-ak * bk * M0 + (ak + bk) * M1 - M2) / h**2
    return P, Q, R


def _tridiag_apply(P, Q, R, w):
    """``B w`` for ``w^T B w = sum_k P w_k^2 + 2 Q w_k w_{k+1} + R w_{k+1}^2``."""
    out = np.zeros_like(w)
    out[:-1] += P * w[:-1] + Q * w[1:]
    out[1:] += Q * w[:-1] + R * w[1:]
    return out


@dataclass(frozen=True, eq=False)
class GagliardoForm:
    """Quadratic form ``v -> |v|^2`` for P1 data on ``n`` uniform nodes.

    ``pad`` is ``None`` for the whole line (constant extension, no cut) or a
    pair ``(dl, dr)``: the seminorm is taken over the window that extends the
    grid by ``dl`` on the left and ``dr`` on the right, ``v`` being constant
    there.
    """

    n: int
    h: float
    s: float
    pad: tuple[float, float] | None

    def __post_init__(self):
        s, h, n = self.s, self.h, self.n
        g = _toeplitz_symbol(n - 1, s)
        object.__setattr__(self, "_g", g)
        object.__setattr__(self, "_scale", h ** (1 - 2 * s) / (s * (2 * s - 1)))
        if n - 1 <= _DENSE_LIMIT:
            i = np.arange(n - 1)
            object.__setattr__(self, "_T", g[np.abs(i[:, None] - i[None, :])])
        if self.pad is not None:
            dl, dr = self.pad
            if dl < 0 or dr < 0:
                raise ValueError("window must contain the grid")
            length = (n - 1) * h
            width = length + dl + dr
            left = _cell_moments(n - 1, h, dl, s)
            right = _cell_moments(n - 1, h, dr, s)
            e = 1.0 - 2.0 * s
            # constant end pieces seen from the far cut
            cl = ((width) ** e - (dl + length) ** e) / e if dr > 0 else 0.0
            cr = ((width) ** e - (dr + length) ** e) / e if dl > 0 else 0.0
            object.__setattr__(self, "_left", left)
            object.__setattr__(self, "_right", right)
            object.__setattr__(self, "_c_end", (cl + cr) / s)
            object.__setattr__(self, "_c_far", width**e / (s * (2 * s - 1)))

    def _toeplitz(self, d):
        if hasattr(self, "_T"):
            return self._T @ d
        return matmul_toeplitz(self._g, d)

    def matvec(self, v) -> np.ndarray:
        """``A v`` where ``|v|^2 = v^T A v``; the gradient is ``2 A v``."""
        v = np.asarray(v, dtype=float)
        d = np.diff(v)
        Td = self._toeplitz(d) * self._scale
        out = np.zeros_like(v)
        out[:-1] -= Td
        out[1:] += Td
        if self.pad is None:
            return out
        w = v - v[0]
        bw = _tridiag_apply(*self._left, w)
        out -= (bw - np.eye(1, v.size, 0)[0] * bw.sum()) / self.s
        wr = (v - v[-1])[::-1]
        br = _tridiag_apply(*self._right, wr)[::-1]
        out -= (br - np.eye(1, v.size, v.size - 1)[0] * br.sum()) / self.s
        jump = v[-1] - v[0]
        coef = self._c_end + self._c_far
        out[0] += coef * jump
        out[-1] -= coef * jump
        return out

    def energy(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.matvec(v))


@lru_cache(maxsize=64)
def gagliardo_form(n: int, h: float, s: float, pad: tuple[float, float] | None = (0.0, 0.0)) -> GagliardoForm:
    return GagliardoForm(n, h, s, pad)


def _window_pad(v: TraceFn, window) -> tuple[float, float] | None:
    if window is None:
        return None
    lo, hi = window
    dl, dr = v.lo - lo, hi - v.hi
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if dl < -tol or dr < -tol:
        raise ValueError("window must contain the trace grid")
    return (max(dl, 0.0), max(dr, 0.0))


def gagliardo(v: TraceFn, s: float, window: tuple[float, float] | None = "grid") -> float:
    """``int_E int_E |v(x) - v(y)|^2 / |x - y|^(1+2s)`` for the P1 interpolant.

    ``E`` is the grid interval by default; a wider ``window`` treats ``v`` as
    constant beyond its grid. ``window=None`` integrates over the whole line.
    """
    if not 0.5 < s < 1.0:
        raise ValueError(f"order s={s} outside (1/2, 1)")
    pad = (0.0, 0.0) if window == "grid" else _window_pad(v, window)
    form = gagliardo_form(v.n, round(v.h, 15), float(s), pad)
    return max(form.energy(v.values), 0.0)


def gagliardo_full_line(v: TraceFn, s: float) -> float:
    """Seminorm over the whole line of ``v`` extended by its end values."""
    return gagliardo(v, s, window=None)


def _trapezoid(values, h):
    return h * (values.sum() - 0.5 * (values[0] + values[-1]))


def g_energy(
    v: TraceFn,
    p: FracParams,
    eps: float,
    V: DoubleWell,
    D_s: float,
    window: tuple[float, float] | None = "grid",
) -> EnergyBreakdown:
    """Boundary functional ``eps^(1-a)/D_s |v|^2 + lambda_eps int V(v)``.

    With a wider ``window`` the constant end pieces contribute to the
    potential term as well; ``window=None`` requires ``v`` to sit in the
    wells at both ends so that the energy is finite.
    """
    if D_s <= 0:
        raise ValueError("D_s must be positive")
    sc = scalings(p, eps)
    vals = v.values
    pot = _trapezoid(V(vals), v.h)
    if window is None:
        tails = V(np.array([vals[0], vals[-1]]))
        if np.any(tails > 1e-14):
            raise ValueError("whole-line energy needs well values at both ends")
    elif window != "grid":
        dl, dr = _window_pad(v, window)
        pot += dl * float(V(vals[0])) + dr * float(V(vals[-1]))
    nl = eps ** (1.0 - p.a) / D_s * gagliardo(v, p.s, window)
    return EnergyBreakdown(nonlocal_part=nl, potential=sc.lambda_small * pot)


def monotone_rearrange(v: TraceFn) -> TraceFn:
    """Nondecreasing rearrangement: the node values sorted on the same grid."""
    return v.with_values(np.sort(v.values))


def truncate(v: TraceFn, delta: float, wells: tuple[float, float]) -> TraceFn:
    """Clamp values to ``[alpha + delta, beta - delta]``."""
    lo, hi = wells
    if not 0.0 < delta < 0.5 * (hi - lo):
        raise ValueError(f"delta must lie in (0, {(hi - lo) / 2}), got {delta}")
    return v.with_values(np.clip(v.values, lo + delta, hi - delta))


# ---------------------------------------------------------------------------
# Explicit lower bounds


def _check_fractions(a_frac, b_frac):
    if not (0.0 <= a_frac < 1.0 and 0.0 <= b_frac < 1.0 and a_frac + b_frac < 1.0):
        raise ValueError("fractions must satisfy 0 <= a, b < 1 and a + b < 1")


def plateau_bound(J_len: float, a_frac: float, b_frac: float, gap: float, s: float) -> float:
    """Seminorm on ``J`` carried by two plateaus ``gap`` apart at the ends of ``J``.

    Exact value of ``2 gap^2 int_A int_B |x-y|^(-1-2s)`` with ``|A| = a|J|`` at
    the left end and ``|B| = b|J|`` at the right end.
    """
    _check_fractions(a_frac, b_frac)
    e = 2.0 * s - 1.0
    bracket = 1.0 - (1 - a_frac) ** -e - (1 - b_frac) ** -e + (1 - a_frac - b_frac) ** -e
    return 2.0 * gap**2 / (2 * s * e * J_len**e) * bracket


def _m_delta(V: DoubleWell, delta: float) -> float:
    lo, hi = V.lo + delta, V.hi - delta
    t = np.linspace(lo, hi, 4097)
    return float(np.min(V(t)))


def lemma42_lower_bound(
    J_len: float,
    a_frac: float,
    b_frac: float,
    delta: float,
    s: float,
    V: DoubleWell,
    D_s: float,
    eps: float = 1.0,
    form: str = "display",
) -> float:
    """Lower bound for the boundary energy on an interval ``J``.

    ``form="display"`` is the three-term bracket plus the constant obtained by
    minimising over the length of the transition set; ``form="derivation"``
    keeps the fourth bracket term and the potential term before that
    minimisation, which makes it depend on ``eps``.
    """
    _check_fractions(a_frac, b_frac)
    if not 0.0 < delta < 0.5 * (V.hi - V.lo):
        raise ValueError("delta out of range")
    if J_len <= 0 or D_s <= 0:
        raise ValueError("J_len and D_s must be positive")
    e = 2.0 * s - 1.0
    gap = V.hi - V.lo - 2.0 * delta
    m = _m_delta(V, delta)
    C_s = 2.0 / (2 * s * e * D_s)
    a = 1.0 - 2.0 * s
    lead = eps ** (1.0 - a) * C_s * gap**2 / J_len**e
    if form == "display":
        bracket = 1.0 - (1 - a_frac) ** -e - (1 - b_frac) ** -e
        return lead * bracket + c_delta(s, gap, m, D_s)
    if form == "derivation":
        bracket = 1.0 - (1 - a_frac) ** -e - (1 - b_frac) ** -e + (1 - a_frac - b_frac) ** -e
        lam = eps ** -((1.0 - a) / (-a))
        return lead * bracket + lam * m * J_len * (1.0 - a_frac - b_frac)
    raise ValueError("form must be 'display' or 'derivation'")


def c_delta(s: float, gap: float, m: float, D_s: float) -> float:
    """``min_L [2 gap^2 / (2s(2s-1) D_s L^(2s-1)) + m L]``, independent of eps."""
    e = 2.0 * s - 1.0
    return 2 ** (1 / (2 * s)) * (2 * s) ** (e / (2 * s)) * gap ** (1 / s) * m ** (e / (2 * s)) / e * D_s ** (-1 / (2 * s))


def kappa_lower_bound(s: float, V: DoubleWell, delta: float, D_s: float | None = None) -> float:
    """Lower bound for the whole-line profile energy.

    With ``D_s=None`` the bound is the one for the unnormalised seminorm plus
    potential, counting one of the two symmetric cross regions. Passing
    ``D_s`` accounts for the ``1/D_s`` in front of the seminorm and for both
    cross regions, which is the bound that applies to the boundary functional.
    """
    if not 0.0 < delta < 0.5 * (V.hi - V.lo):
        raise ValueError("delta out of range")
    e = 2.0 * s - 1.0
    gap = V.hi - V.lo - 2.0 * delta
    m = _m_delta(V, delta)
    bound = (2 * s) ** (e / (2 * s)) / e * gap ** (1 / s) * m ** (e / (2 * s))
    if D_s is not None:
        bound *= (2.0 / D_s) ** (1 / (2 * s))
    return bound
