"""Modified Bessel functions, extension profiles and the trace constants.

``K_nu`` comes from the integral ``int_0^inf exp(-y cosh t) cosh(nu t) dt``,
summed with the trapezoid rule (the integrand decays doubly exponentially,
so the rule converges geometrically). ``I_nu`` comes from its ascending
series. The two routes are independent and meet in the Wronskian.

Fourier convention: ``v_hat(xi) = int v(x) exp(-2 pi i x xi) dx``. In that
convention both the Gagliardo form and the harmonic-extension energy carry the
factor ``(2 pi)**(2s)``; ``e_s_freq`` below is the extension-energy constant
in that convention, and the sharp trace constant is
``D_s = d_s (2 pi)**(2s) / e_s_freq = d_s / e_s``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "BesselValue",
    "ConstantsReport",
    "gamma_fn",
    "bessel_IK",
    "bessel_i",
    "bessel_k",
    "phi0",
    "phi0_prime",
    "phiM",
    "phiM_prime",
    "phiM_coefficients",
    "jbar",
    "jbar_M",
    "strip_deficit",
    "d_s_constant",
    "e_s_constant",
    "D_s_constant",
    "check_order",
]

_K_STEP = 0.1
_CHUNK = 20000
_K_SMALL = 1e-3


def check_order(s: float) -> float:
    s = float(s)
    if not (0.5 < s < 1.0):
        raise ValueError(f"order s={s} outside (1/2, 1)")
    return s


def gamma_fn(x: float) -> float:
    """Euler Gamma on the positive axis."""
    if not x > 0:
        raise ValueError(f"gamma_fn is only defined here for x > 0, got {x}")
    return math.gamma(x)


# ---------------------------------------------------------------------------
# Bessel functions of real order


def _as_array(y):
    y = np.asarray(y, dtype=float)
    return y, y.ndim == 0


def bessel_i(nu: float, y, deriv: bool = False):
    """``I_nu(y)`` (or its derivative) by the ascending series, ``nu > -1``, ``y > 0``."""
    y, scalar = _as_array(y)
    flat = np.atleast_1d(y).ravel()
    if np.any(flat <= 0):
        raise ValueError("bessel_i needs y > 0")
    out = np.empty_like(flat)
    for start in range(0, flat.size, _CHUNK):
        yy = flat[start : start + _CHUNK]
        nterms = int(np.max(yy)) + 40
        k = np.arange(nterms, dtype=float)
        lg = np.array([math.lgamma(kk + 1.0) + math.lgamma(kk + nu + 1.0) for kk in k])
        sign = np.array([math.copysign(1.0, math.gamma(kk + nu + 1.0)) for kk in k[:3]] + [1.0] * (nterms - 3))
        logh = np.log(yy / 2.0)
        if deriv:
            # d/dy (y/2)^(2k+nu) = (2k+nu)/2 * (y/2)^(2k+nu-1)
            coef = (2.0 * k + nu) / 2.0
            expo = np.outer(logh, 2.0 * k + nu - 1.0) - lg
            terms = np.exp(expo) * coef * sign
        else:
            expo = np.outer(logh, 2.0 * k + nu) - lg
            terms = np.exp(expo) * sign
        out[start : start + _CHUNK] = terms.sum(axis=1)
    out = out.reshape(np.shape(y)) if not scalar else out[0]
    return float(out) if scalar else out


def _k_nodes(ymin: float, nu: float):
    # truncate where exp(-y (cosh t - 1)) cosh(nu t) is below 1e-18 of the head
    tmax = 2.0
    while ymin * (math.cosh(tmax) - 1.0) < 42.0 + abs(nu) * tmax:
        tmax += 0.5
    n = int(math.ceil(tmax / _K_STEP))
    t = np.arange(n + 1) * _K_STEP
    w = np.full(n + 1, _K_STEP)
    w[0] = 0.5 * _K_STEP
    return t, w


def bessel_k(nu: float, y, deriv: bool = False):
    """``K_nu(y)`` (or its derivative) from the cosh integral representation."""
    y, scalar = _as_array(y)
    flat = np.atleast_1d(y).ravel()
    if np.any(flat <= 0):
        raise ValueError("bessel_k needs y > 0")
    out = np.empty_like(flat)
    small = flat < _K_SMALL
    if np.any(small) and abs(math.sin(math.pi * nu)) > 1e-3:
        # reflection formula; the ascending series is exact to rounding here
        ys = flat[small]
        diff = bessel_i(-nu, ys, deriv) - bessel_i(nu, ys, deriv)
        out[small] = 0.5 * math.pi / math.sin(math.pi * nu) * diff
    else:
        small = np.zeros_like(flat, dtype=bool)
    rest = ~small
    if np.any(rest):
        out[rest] = _k_integral(nu, flat[rest], deriv)
    out = out.reshape(np.shape(y)) if not scalar else out[0]
    return float(out) if scalar else out


def _k_integral(nu: float, flat: np.ndarray, deriv: bool) -> np.ndarray:
    out = np.empty_like(flat)
    order = np.argsort(flat)
    sorted_y = flat[order]
    res = np.empty_like(sorted_y)
    for start in range(0, sorted_y.size, _CHUNK):
        yy = sorted_y[start : start + _CHUNK]
        t, w = _k_nodes(float(yy[0]), nu)
        ch = np.cosh(t)
        g = np.cosh(nu * t) * w
        if deriv:
            g = -g * ch
        # scale by exp(-y) so large arguments do not underflow before weighting
        res[start : start + _CHUNK] = np.exp(-np.outer(yy, ch - 1.0)) @ g * np.exp(-yy)
    out[order] = res
    return out


@dataclass(frozen=True)
class BesselValue:
    order: float
    arg: float
    i_s: float
    k_s: float
    di_s: float
    dk_s: float

    @property
    def wronskian(self) -> float:
        return self.i_s * self.dk_s - self.di_s * self.k_s


def bessel_IK(s: float, y: float) -> BesselValue:
    s = check_order(s)
    if not y > 0:
        raise ValueError(f"bessel_IK needs y > 0, got {y}")
    return BesselValue(
        order=s,
        arg=float(y),
        i_s=bessel_i(s, y),
        k_s=bessel_k(s, y),
        di_s=bessel_i(s, y, deriv=True),
        dk_s=bessel_k(s, y, deriv=True),
    )


# ---------------------------------------------------------------------------
# Extension profiles


def _phi0_norm(s: float) -> float:
    return 2.0 ** (1.0 - s) / math.gamma(s)


def phi0(s: float, y):
    """Decaying solution of ``phi'' + (a/y) phi' - phi = 0`` with ``phi(0) = 1``."""
    s = check_order(s)
    y, scalar = _as_array(y)
    if np.any(y < 0):
        raise ValueError("phi0 is defined for y >= 0")
    out = np.zeros(np.shape(y))
    tiny = y < 1e-12
    big = y > 700.0
    mid = ~(tiny | big)
    # two-term expansion near the origin
    out[tiny] = 1.0 - math.gamma(1 - s) / math.gamma(1 + s) * (y[tiny] / 2.0) ** (2 * s)
    if np.any(mid):
        out[mid] = _phi0_norm(s) * y[mid] ** s * bessel_k(s, y[mid])
    return float(out) if scalar else out


def phi0_prime(s: float, y):
    """Derivative of :func:`phi0`; uses ``(y^s K_s)' = -y^s K_{1-s}``."""
    s = check_order(s)
    y, scalar = _as_array(y)
    out = np.zeros(np.shape(y))
    pos = (y > 0) & (y <= 700.0)
    if np.any(pos):
        out[pos] = -_phi0_norm(s) * y[pos] ** s * bessel_k(1.0 - s, y[pos])
    return float(out) if scalar else out


def phiM_coefficients(s: float, M: float) -> tuple[float, float]:
    """Coefficients ``(c1, c2)`` of ``y^s [c1 I_s + c2 K_s]`` for the strip profile.

    Rows: the small-y normalisation ``phi(0) = 1`` (only ``K_s`` contributes)
    and the Neumann condition ``phi'(M) = 0``.
    """
    s = check_order(s)
    if not M > 0:
        raise ValueError(f"strip height M must be positive, got {M}")
    if M > 350.0:
        return 0.0, _phi0_norm(s)
    # (y^s I_s)' = y^s I_{s-1},  (y^s K_s)' = -y^s K_{1-s}
    mat = np.array(
        [
            [0.0, math.gamma(s) * 2.0 ** (s - 1.0)],
            [M**s * bessel_i(s - 1.0, M), -(M**s) * bessel_k(1.0 - s, M)],
        ]
    )
    rhs = np.array([1.0, 0.0])
    if abs(np.linalg.det(mat)) == 0:
        raise ArithmeticError("singular system for the strip profile")
    c1, c2 = np.linalg.solve(mat, rhs)
    return float(c1), float(c2)


def phiM(s: float, M: float, y):
    """Strip profile: ``phi(0) = 1``, ``phi'(M) = 0``, evaluated on ``[0, M]``."""
    c1, c2 = phiM_coefficients(s, M)
    y, scalar = _as_array(y)
    if np.any(y < 0) or np.any(y > M * (1 + 1e-12)):
        raise ValueError("phiM is defined on [0, M]")
    out = np.empty(np.shape(y))
    zero = y == 0
    out[zero] = 1.0
    pos = ~zero
    if np.any(pos):
        yp = y[pos]
        val = c2 * yp**s * bessel_k(s, yp)
        if c1 != 0.0:
            val = val + c1 * yp**s * bessel_i(s, yp)
        out[pos] = val
    return float(out) if scalar else out


def phiM_prime(s: float, M: float, y):
    c1, c2 = phiM_coefficients(s, M)
    y, scalar = _as_array(y)
    out = np.zeros(np.shape(y))
    pos = y > 0
    if np.any(pos):
        yp = y[pos]
        val = -c2 * yp**s * bessel_k(1.0 - s, yp)
        if c1 != 0.0:
            val = val + c1 * yp**s * bessel_i(s - 1.0, yp)
        out[pos] = val
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# Weighted one-dimensional energies


def _graded_rule(upper: float, a: float, levels: int, order: int):
    """Nodes/weights for ``int_0^upper f(t) t^a dt`` after ``u = t^(1+a)``.

    Geometric cells toward ``u = 0`` handle the algebraic behaviour of the
    profiles at the origin.
    """
    umax = upper ** (1.0 + a)
    gx, gw = np.polynomial.legendre.leggauss(order)
    # keep t = u^(1/(1+a)) above ~2^-800 so it does not underflow as a -> -1
    levels = max(1, min(levels, int((1.0 + a) * 800)))
    # geometric near zero, then uniform up to umax
    edges = [0.0] + list(umax * 2.0 ** -np.arange(levels, 0, -1, dtype=float))
    if umax > 1.0:
        edges = [0.0] + list(2.0 ** -np.arange(levels, 0, -1, dtype=float))
        edges += list(np.linspace(1.0, umax, int(math.ceil(4 * (umax - 1.0))) + 2)[:])
    else:
        edges.append(umax)
    edges = np.unique(np.asarray(edges))
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    u = (0.5 * (hi + lo))[:, None] + half[:, None] * gx[None, :]
    wts = half[:, None] * gw[None, :] / (1.0 + a)
    t = u.ravel() ** (1.0 / (1.0 + a))
    return t, wts.ravel()


def jbar(s: float, profile, dprofile, upper: float, levels: int = 48, order: int = 20) -> float:
    """``int_0^upper (phi'^2 + phi^2) t^a dt`` for vectorised callables."""
    a = 1.0 - 2.0 * s
    t, w = _graded_rule(upper, a, levels, order)
    return float(np.sum(w * (dprofile(t) ** 2 + profile(t) ** 2)))


def _phi0_cutoff(s: float) -> float:
    t = 1.0
    while phi0(s, t) > 1e-17:
        t += 1.0
    return t


def e_s_constant(s: float, levels: int = 48, order: int = 20) -> float:
    """Energy ``int_0^inf (phi0'^2 + phi0^2) t^a dt`` of the half-line profile."""
    s = check_order(s)
    upper = _phi0_cutoff(s)
    return jbar(s, lambda t: phi0(s, t), lambda t: phi0_prime(s, t), upper, levels, order)


def strip_deficit(s: float, M: float, levels: int = 48, order: int = 20) -> float:
    """``e_s - Jbar_M[phi_M]`` evaluated from the profile difference.

    ``phi_M - phi0 = c1 y^s I_s`` exactly (the normalisation row fixes
    ``c2``), so the deficit is integrated directly instead of as a difference
    of two nearly equal energies.
    """
    s = check_order(s)
    a = 1.0 - 2.0 * s
    c1, _ = phiM_coefficients(s, M)
    inner = 0.0
    if c1 != 0.0:
        t, w = _graded_rule(M, a, levels, order)
        dphi = c1 * t**s * bessel_i(s, t)
        ddphi = c1 * t**s * bessel_i(s - 1.0, t)
        p0, dp0 = phi0(s, t), phi0_prime(s, t)
        inner = float(np.sum(w * (ddphi * (2.0 * dp0 + ddphi) + dphi * (2.0 * p0 + dphi))))
    tail = 0.0
    upper = _phi0_cutoff(s)
    if M < upper:
        gx, gw = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(M, upper, int(math.ceil(upper - M)) + 1)
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        t = ((0.5 * (hi + lo))[:, None] + half[:, None] * gx[None, :]).ravel()
        w = (half[:, None] * gw[None, :]).ravel() * t**a
        tail = float(np.sum(w * (phi0_prime(s, t) ** 2 + phi0(s, t) ** 2)))
    return tail - inner


def jbar_M(s: float, M: float, levels: int = 48, order: int = 20) -> float:
    """Energy of the strip profile over ``(0, M)``."""
    return e_s_constant(s, levels, order) - strip_deficit(s, M, levels, order)


def d_s_constant(s: float, periods: int = 400) -> float:
    """``int_R (2 - 2 cos z) / |z|^(1+2s) dz``.

    ``|z| < 1``: termwise integration of the cosine series.
    ``|z| > 1``: ``2/z^(1+2s)`` in closed form, the cosine part summed over
    half-period cells with Gauss-Legendre and closed by the asymptotic
    integration-by-parts tail.
    """
    s = check_order(s)
    p = 1.0 + 2.0 * s
    near = 0.0
    k = 1
    fact = 2.0  # (2k)!
    while True:
        term = 2.0 / fact / (2 * k - 2 * s)
        near += term if k % 2 else -term
        if term < 1e-18:
            break
        k += 1
        fact *= (2 * k - 1) * (2 * k)
    far_smooth = 2.0 / (p - 1.0)
    gx, gw = np.polynomial.legendre.leggauss(24)
    edges = np.concatenate([[1.0], math.pi * (np.arange(1, 2 * periods + 1) + 0.5)])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    z = (0.5 * (lo + hi))[:, None] + half[:, None] * gx[None, :]
    osc = float(np.sum(half[:, None] * gw[None, :] * np.cos(z) * z ** (-p)))
    Z = edges[-1]
    # int_Z^inf cos z z^-p dz = sum_j of alternating derivative terms
    tail = 0.0
    coef = 1.0
    pw = p
    for j in range(8):
        # j-th integration by parts term
        trig = [-math.sin(Z), -math.cos(Z), math.sin(Z), math.cos(Z)][j % 4]
        tail += coef * trig * Z ** (-pw)
        coef *= pw
        pw += 1.0
    osc += tail
    return 2.0 * (near + far_smooth - 2.0 * osc)


@dataclass(frozen=True)
class ConstantsReport:
    s: float
    d_s: float
    e_s: float
    e_s_freq: float
    D_s: float
    quadrature_error_estimates: tuple[float, float, float]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["quadrature_error_estimates"] = list(self.quadrature_error_estimates)
        return out


_MEMO: dict[float, ConstantsReport] = {}
_MEMO_LOCK = threading.Lock()


def D_s_constant(s: float) -> ConstantsReport:
    """Assemble ``d_s``, ``e_s`` and the sharp trace constant ``D_s``.

    Error estimates are the changes under doubling of each quadrature.
    """
    s = check_order(s)
    with _MEMO_LOCK:
        hit = _MEMO.get(s)
    if hit is not None:
        return hit
    d = d_s_constant(s)
    d2 = d_s_constant(s, periods=800)
    e = e_s_constant(s)
    e2 = e_s_constant(s, levels=96, order=30)
    factor = (2.0 * math.pi) ** (2.0 * s)
    e_freq = factor * e
    D = d * factor / e_freq
    D2 = d2 / e2
    rep = ConstantsReport(
        s=s,
        d_s=d,
        e_s=e,
        e_s_freq=e_freq,
        D_s=D,
        quadrature_error_estimates=(abs(d2 - d), abs(e2 - e), abs(D2 - D)),
    )
    with _MEMO_LOCK:
        _MEMO.setdefault(s, rep)
        return _MEMO[s]
