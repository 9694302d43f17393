"""Transition profiles: the local ODE profile and the nonlocal optimal profile.

The nonlocal profile minimises the whole-line boundary functional at unit
scale over P1 profiles on ``[-T, T]`` that are pinned to the wells outside.
Descent is a monotone accelerated projected gradient method whose
projection is rearrangement followed by clamping; both maps never increase
the discrete energy, so every accepted iterate lowers it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .nonlocal_energy import GagliardoForm, TraceFn, gagliardo_form
from .params import DoubleWell, FracParams

__all__ = [
    "ProfileSolution",
    "modica_profile",
    "wall_profile",
    "minimize_profile",
    "kappa_T",
    "kappa_s",
    "KappaReport",
    "kappa_s_report",
    "aitken",
]

_ODE_TOL = dict(rtol=1e-12, atol=1e-14)


def _ode_rhs(w: DoubleWell):
    def rhs(_t, th):
        x = min(max(th[0], w.lo), w.hi)
        return [math.sqrt(max(float(w.eval(x)), 0.0))]

    return rhs


def _integrate(w: DoubleWell, start: float, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.full(t.shape, start)
    rhs = _ode_rhs(w)
    for sign in (1.0, -1.0):
        mask = sign * t > 0
        if not np.any(mask):
            continue
        span = float(np.max(sign * t[mask]))
        sol = solve_ivp(
            lambda tt, th: [sign * rhs(tt, th)[0]],
            (0.0, span),
            [start],
            method="RK45",
            dense_output=True,
            **_ODE_TOL,
        )
        out[mask] = sol.sol(sign * t[mask])[0]
    return np.clip(out, w.lo, w.hi)


def modica_profile(w: DoubleWell, t):
    """Solution of ``theta' = sqrt(W(theta))``, ``theta(0) = (lo + hi)/2``."""
    out = _integrate(w, 0.5 * (w.lo + w.hi), t)
    return float(out[0]) if np.ndim(t) == 0 else out


def wall_profile(w: DoubleWell, gamma: float, t):
    """Solution of ``theta' = sqrt(W(theta))``, ``theta(0) = gamma``, for ``t >= 0``."""
    if not w.lo < gamma < w.hi:
        raise ValueError(f"gamma={gamma} must lie strictly between the wells ({w.lo}, {w.hi})")
    if np.any(np.asarray(t) < 0):
        raise ValueError("wall_profile is defined for t >= 0")
    out = _integrate(w, gamma, t)
    return float(out[0]) if np.ndim(t) == 0 else out


@dataclass(frozen=True, eq=False)
class ProfileSolution:
    profile: TraceFn
    T: float
    nonlocal_part: float
    potential_part: float
    value: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "n": self.profile.n,
            "nonlocal": self.nonlocal_part,
            "potential": self.potential_part,
            "value": self.value,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _trap_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def minimize_profile(
    form: GagliardoForm,
    V: DoubleWell,
    D_s: float,
    init: np.ndarray,
    ends: tuple[float, float],
    max_iter: int = 40000,
    tol: float = 1e-9,
    window: int = 50,
):
    """Minimise ``|v|^2/D_s + int V(v)`` over nondecreasing pinned nodal values.

    Returns ``(values, nonlocal, potential, iterations, converged)``.
    """
    lo_val, hi_val = ends
    lo_c, hi_c = min(ends), max(ends)
    wts = _trap_weights(form.n, form.h)

    def project(x):
        x = np.clip(x, lo_c, hi_c)
        if hi_val >= lo_val:
            x = np.sort(x)
        else:
            x = np.sort(x)[::-1]
        x[0], x[-1] = lo_val, hi_val
        return x

    def parts(x):
        return form.energy(x) / D_s, float(wts @ V(x))

    def energy_grad(x):
        Ax = form.matvec(x)
        e = float(x @ Ax) / D_s + float(wts @ V(x))
        g = 2.0 * Ax / D_s + wts * V.deriv(x)
        g[0] = g[-1] = 0.0
        return e, g

    x = project(np.asarray(init, dtype=float).copy())
    fx, gx = energy_grad(x)
    # curvature bound from the diagonal of the quadratic part and V''
    t = np.linspace(lo_c, hi_c, 257)
    vpp = np.max(np.abs(np.gradient(V.deriv(t), t))) if hi_c > lo_c else 1.0
    diag = 2.0 * abs(form.matvec(np.eye(1, form.n, form.n // 2)[0])[form.n // 2]) / D_s
    step = 1.0 / (2.0 * diag + vpp * form.h)
    y, fy, gy = x, fx, gx
    tk = 1.0
    history = [fx]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        while True:
            z = project(y - step * gy)
            fz, gz = energy_grad(z)
            d = z - y
            if fz <= fy + gy @ d + 0.5 / step * (d @ d) + 1e-15 * abs(fy):
                break
            step *= 0.5
            if step < 1e-16:
                break
        if fz <= fx:
            x_new, f_new, g_new = z, fz, gz
        else:
            x_new, f_new, g_new = x, fx, gx
        if f_new > fx:
            raise AssertionError("energy increased during projected descent")
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        mom = (tk / t_next) * (z - x_new) + ((tk - 1.0) / t_next) * (x_new - x)
        if fz > fx:
            # restart the momentum after a rejected extrapolation
            t_next = 1.0
            mom = np.zeros_like(x)
        y = project(x_new + mom) if np.any(mom) else x_new
        x, fx, gx = x_new, f_new, g_new
        tk = t_next
        fy, gy = energy_grad(y) if y is not x else (fx, gx)
        history.append(fx)
        if len(history) > window:
            old = history[-window - 1]
            if old - fx <= tol * abs(fx) and it >= 2 * window:
                converged = True
                break
    nl, pot = parts(x)
    return x, nl, pot, it, converged


def _ramp(grid: np.ndarray, T: float, ends) -> np.ndarray:
    lo_val, hi_val = ends
    width = max(T / 4.0, 1e-12)
    shape = np.tanh(grid / (width / 2.0))
    return lo_val + (hi_val - lo_val) * 0.5 * (1.0 + shape)


def kappa_T(
    p: FracParams,
    V: DoubleWell,
    D_s: float,
    T: float,
    N: int,
    init: np.ndarray | TraceFn | None = None,
    max_iter: int = 40000,
    tol: float = 1e-9,
) -> ProfileSolution:
    """Minimal whole-line energy over profiles equal to the wells outside ``[-T, T]``."""
    if T <= 0:
        raise ValueError("T must be positive")
    if N < 64:
        raise ValueError("N must be at least 64")
    if V.hi == V.lo:
        raise ValueError("wells coincide; there is no transition")
    grid = np.linspace(-T, T, N)
    ends = (V.lo, V.hi)
    if init is None:
        x0 = _ramp(grid, T, ends)
    elif isinstance(init, TraceFn):
        x0 = np.interp(grid, init.grid, init.values, left=V.lo, right=V.hi)
    else:
        x0 = np.asarray(init, dtype=float)
    form = gagliardo_form(N, round(grid[1] - grid[0], 15), float(p.s), None)
    x, nl, pot, it, conv = minimize_profile(form, V, D_s, x0, ends, max_iter=max_iter, tol=tol)
    return ProfileSolution(TraceFn(grid, x), float(T), nl, pot, nl + pot, it, conv)


def aitken(values) -> float:
    """Aitken extrapolation of the last three terms of a sequence."""
    x0, x1, x2 = (float(v) for v in values[-3:])
    den = (x2 - x1) - (x1 - x0)
    if den == 0.0 or (x2 - x1) * (x1 - x0) <= 0:
        return x2
    return x2 - (x2 - x1) ** 2 / den


@dataclass(frozen=True, eq=False)
class KappaReport:
    value: float
    solutions: tuple[ProfileSolution, ...]
    h: float

    @property
    def values_T(self) -> list[float]:
        return [sol.value for sol in self.solutions]

    @property
    def converged(self) -> bool:
        return all(sol.converged for sol in self.solutions)

    def to_dict(self) -> dict:
        return {
            "kappa_s": self.value,
            "h": self.h,
            "truncated": [sol.to_dict() for sol in self.solutions],
        }


def kappa_s_report(
    p: FracParams,
    V: DoubleWell,
    D_s: float,
    Ts=(8.0, 16.0, 32.0, 64.0),
    nodes_per_unit: int = 16,
    tol: float = 1e-9,
) -> KappaReport:
    """``kappa_s^T`` on a common mesh, warm-started from the previous ``T``."""
    sols = []
    prev = None
    for T in Ts:
        N = int(round(2 * T * nodes_per_unit)) + 1
        N = max(N, 64)
        sol = kappa_T(p, V, D_s, T, N, init=prev, tol=tol)
        sols.append(sol)
        prev = sol.profile
    vals = [sol.value for sol in sols]
    value = aitken(vals) if len(vals) >= 3 else vals[-1]
    return KappaReport(value, tuple(sols), 1.0 / nodes_per_unit)


def kappa_s(p: FracParams, V: DoubleWell, D_s: float, **kwargs) -> float:
    """Extrapolated optimal-profile constant."""
    return kappa_s_report(p, V, D_s, **kwargs).value
