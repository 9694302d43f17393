"""Epsilon sweeps that witness each limit statement numerically.

All boundary computations run at unit scale on the rescaled domain
``E / Lambda_eps``; the boundary functional is invariant under that change
of variables, so the recorded energies are the energies at scale ``eps``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .extension import poisson_energy
from .nonlocal_energy import TraceFn, g_energy, gagliardo, gagliardo_form
from .params import DoubleWell, FracParams, load_well, make_params, primitive_W, quartic_well, scalings, sigma_constant
from .profile import kappa_s_report, minimize_profile, modica_profile, wall_profile
from .special import D_s_constant

__all__ = [
    "EXPERIMENTS",
    "DEFAULT_EPS",
    "ExperimentConfig",
    "SweepRecord",
    "Report",
    "ConvergenceError",
    "interior_sweep",
    "boundary_sweep",
    "sharpness_experiment",
    "boundary_effect_check",
    "wall_effect_check",
    "run",
    "emit",
    "render",
]

REPORT_SCHEMA = "fracphase-report/1"
EXPERIMENTS = ("interior", "boundary", "sharpness", "boundary-effect", "wall")
CSV_COLUMNS = ("eps", "energy_total", "nonlocal", "potential", "predicted_limit", "relative_gap")


def _geometric(start, stop, n):
    return tuple(float(start * (stop / start) ** (k / (n - 1))) for k in range(n))


DEFAULT_EPS = {
    "interior": (0.2, 0.1, 0.05, 0.025),
    "boundary": _geometric(0.3, 0.05, 6),
    "sharpness": (0.4, 0.2, 0.1, 0.05),
    "boundary-effect": _geometric(0.2, 0.05, 5),
    "wall": (0.2, 0.1, 0.05, 0.025),
}


class ConvergenceError(RuntimeError):
    """An inner solver stopped at its iteration cap."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by all sweeps; fields that a sweep does not use are ignored.

    ``grid`` is the resolution knob: nodes per unit length at unit scale for
    the boundary sweeps, nodes per transition width for the interior and
    wall sweeps.
    """

    experiment: str
    a: float = -0.5
    eps_list: tuple[float, ...] | None = None
    grid: int = 16
    well: str = "quartic"
    well_lo: float | None = None
    well_hi: float | None = None
    potential: str = "quartic"
    potential_lo: float | None = None
    potential_hi: float | None = None
    jumps: int = 1
    r: float = 0.5
    gamma: float = 0.0
    T: tuple[float, ...] = (8.0, 16.0, 32.0, 64.0)
    seed: int = 0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; valid tags: {', '.join(EXPERIMENTS)}")
        make_params(self.a)
        eps = tuple(float(e) for e in (DEFAULT_EPS[self.experiment] if self.eps_list is None else self.eps_list))
        if not eps:
            raise ValueError("eps list is empty")
        if any(not (e > 0 and math.isfinite(e)) for e in eps):
            raise ValueError("every eps must be positive")
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise ValueError("eps list must be strictly decreasing")
        object.__setattr__(self, "eps_list", eps)
        object.__setattr__(self, "T", tuple(float(t) for t in self.T))
        if self.grid < 2:
            raise ValueError("grid must be at least 2")
        if self.jumps not in (0, 1, 2):
            raise ValueError("jumps must be 0, 1 or 2")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not self.T or any(t <= 0 for t in self.T) or any(t2 <= t1 for t1, t2 in zip(self.T, self.T[1:])):
            raise ValueError("T values must be positive and increasing")

    @property
    def params(self) -> FracParams:
        return make_params(self.a)

    def _well(self, spec, lo, hi) -> DoubleWell:
        if spec == "quartic":
            return quartic_well() if lo is None else quartic_well(lo, hi)
        if spec == "quartic01":
            return quartic_well(0.0, 1.0, 4.0)
        if lo is None or hi is None:
            raise ValueError(f"tabulated potential {spec!r} needs explicit well positions")
        return load_well(spec, lo, hi)

    @property
    def W(self) -> DoubleWell:
        return self._well(self.well, self.well_lo, self.well_hi)

    @property
    def V(self) -> DoubleWell:
        return self._well(self.potential, self.potential_lo, self.potential_hi)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eps_list"] = list(self.eps_list)
        out["T"] = list(self.T)
        return out


@dataclass(frozen=True)
class SweepRecord:
    """One sweep point. ``nonlocal_part`` holds the gradient-type term of the energy."""

    eps: float
    energy_total: float
    nonlocal_part: float
    potential: float
    predicted_limit: float
    extras: dict = field(default_factory=dict)

    @property
    def relative_gap(self) -> float:
        if self.predicted_limit == 0:
            return self.energy_total - self.predicted_limit
        return (self.energy_total - self.predicted_limit) / self.predicted_limit

    def row(self) -> dict:
        return {
            "eps": self.eps,
            "energy_total": self.energy_total,
            "nonlocal": self.nonlocal_part,
            "potential": self.potential,
            "predicted_limit": self.predicted_limit,
            "relative_gap": self.relative_gap,
        }


@dataclass(frozen=True)
class Report:
    kind: str
    config: dict
    records: tuple[SweepRecord, ...] = ()
    payload: dict = field(default_factory=dict)
    converged: bool = True

    def to_dict(self) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "version": __version__,
            "kind": self.kind,
            "config": self.config,
            "converged": self.converged,
        }
        if self.records:
            out["records"] = [dict(rec.row(), extras=rec.extras) for rec in self.records]
        if self.payload:
            out["payload"] = self.payload
        return out


def gap_trend_ok(gaps, floor: float = 1e-9) -> bool:
    """Last three ``|gap|`` decrease strictly, or have reached the noise floor."""
    tail = [abs(g) for g in gaps[-3:]]
    return all(b < a or b <= floor for a, b in zip(tail, tail[1:]))


# ---------------------------------------------------------------------------
# Interior: flat weight h = r, one or two transitions


def _interior_profile(W: DoubleWell, x, width: float, jumps: int):
    if jumps == 1:
        return modica_profile(W, x / width)
    # up at x = -1/2, down at x = 1/2
    return modica_profile(W, np.minimum(x + 0.5, 0.5 - x) / width)


def interior_sweep(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Recovery sequence ``theta(e(x)/(eps^(1-a) r^a))`` on ``A = (-1, 1)``.

    The gradient uses ``theta' = sqrt(W(theta))`` pointwise, so the only
    errors are domain truncation and the trapezoid rule.
    """
    p, W = cfg.params, cfg.W
    a = p.a
    sigma = sigma_constant(W)
    records = []
    for eps in cfg.eps_list:
        width = eps ** (1.0 - a) * cfg.r**a
        n = int(min(2**16, max(2 * cfg.grid / width, 2 * cfg.grid))) + 1
        x = np.linspace(-1.0, 1.0, n)
        wts = np.full(n, x[1] - x[0])
        wts[[0, -1]] *= 0.5
        if cfg.jumps == 0:
            grad = pot = 0.0
            lip = 0.0
        else:
            u = _interior_profile(W, x, width, cfg.jumps)
            du = np.sqrt(np.maximum(W(u), 0.0)) / width
            grad = eps ** (1.0 - a) * cfg.r**a * float(wts @ du**2)
            pot = eps ** -(1.0 - a) * cfg.r ** (-a) * float(wts @ W(u))
            lip = float(np.max(du)) * eps ** (1.0 - a) * cfg.r**a
        records.append(
            SweepRecord(eps, grad + pot, grad, pot, cfg.jumps * sigma, {"nodes": n, "lipschitz_C": lip})
        )
    return records


# ---------------------------------------------------------------------------
# Boundary: pinned transition on E = (-1, 1)


def _kappa(cfg: ExperimentConfig, D_s: float):
    rep = kappa_s_report(cfg.params, cfg.V, D_s, Ts=cfg.T, nodes_per_unit=cfg.grid)
    if not rep.converged:
        raise ConvergenceError("optimal-profile descent hit its iteration cap")
    return rep


def boundary_sweep(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Minimise the boundary functional over pinned monotone traces on ``E``.

    At unit scale ``E`` becomes ``(-L, L)``, ``L = 1/Lambda_eps``; the profile
    is free on ``[-T_core, T_core]`` (``T_core = min(L, max T)``) and
    constant beyond it inside the window.
    """
    p, V = cfg.params, cfg.V
    D_s = D_s_constant(p.s).D_s
    kap = _kappa(cfg, D_s)
    phiT = kap.solutions[-1].profile
    ends = (V.lo, V.hi) if cfg.jumps else (V.lo, V.lo)
    records = []
    for eps in cfg.eps_list:
        L = 1.0 / scalings(p, eps).lambda_big
        core = min(L, cfg.T[-1])
        n = int(round(2 * core * cfg.grid)) + 1
        grid = np.linspace(-core, core, n)
        form = gagliardo_form(n, round(grid[1] - grid[0], 15), p.s, (L - core, L - core))
        if cfg.jumps:
            init = np.interp(grid, phiT.grid, phiT.values, left=V.lo, right=V.hi)
        else:
            init = np.full(n, V.lo)
        x, nl, pot, it, conv = minimize_profile(form, V, D_s, init, ends)
        if not conv:
            raise ConvergenceError(f"boundary minimisation did not converge at eps={eps}")
        extras = {"L": L, "core": core, "nodes": n, "iterations": it}
        if cfg.jumps:
            # rescaled optimal profile as an upper-bound witness
            witness = g_energy(TraceFn(grid, init), p, 1.0, V, D_s, window=(-L, L))
            extras.update(witness=witness.total, kappa_T=kap.solutions[-1].value)
        limit = kap.value if cfg.jumps else 0.0
        records.append(SweepRecord(eps, nl + pot, nl, pot, limit, extras))
    return records


def sharpness_experiment(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Both sides of the sharpness identity for the linear ramp of width ``Lambda_eps``.

    ``lhs = eps^(1-a) int_D |grad u|^2 y^a`` over ``D = (-1,1) x (0,1)`` and
    ``rhs = eps^(1-a)/D_s |v|^2`` over ``(-1,1)^2``, both evaluated at unit
    scale where they coincide with their ``eps`` values.
    """
    p = cfg.params
    D_s = D_s_constant(p.s).D_s
    ramp = TraceFn(np.array([-0.5, 0.5]), np.array([0.0, 1.0]))
    records = []
    for eps in cfg.eps_list:
        L = 1.0 / scalings(p, eps).lambda_big
        if L <= 0.5:
            raise ValueError(f"eps={eps} too large: the ramp does not fit in the domain")
        lhs = poisson_energy(ramp, p.s, (-L, L), L, min_nodes=4 * cfg.grid)
        rhs = gagliardo(ramp, p.s, window=(-L, L)) / D_s
        records.append(
            SweepRecord(eps, lhs, rhs, 0.0, rhs, {"lhs": lhs, "rhs": rhs, "R_eps": lhs - rhs, "ratio": lhs / rhs})
        )
    return records


def boundary_effect_check(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Energy of the rescaled Poisson extension of the optimal profile on ``D``."""
    p, V = cfg.params, cfg.V
    D_s = D_s_constant(p.s).D_s
    kap = _kappa(cfg, D_s)
    phiT = kap.solutions[-1].profile
    records = []
    for eps in cfg.eps_list:
        L = 1.0 / scalings(p, eps).lambda_big
        dirichlet = poisson_energy(phiT, p.s, (-L, L), L)
        inside = phiT.restrict(-L, L)
        pot = float(np.trapezoid(V(inside.values), inside.grid)) if inside.n >= 2 else 0.0
        records.append(SweepRecord(eps, dirichlet + pot, dirichlet, pot, kap.value, {"L": L}))
    return records


def wall_effect_check(cfg: ExperimentConfig) -> list[SweepRecord]:
    """Wall layer ``u(d) = theta(omega)``, ``omega = (d/eps)^(1-a)/(1-a)``, on ``d in (0, r)``.

    Energy per unit wall area with the singular weight ``d^a``; cell
    integrals of ``d^a`` and ``d^-a`` are exact.
    """
    p, W = cfg.params, cfg.W
    a = p.a
    gamma = cfg.gamma
    if not W.lo < gamma <= W.hi:
        raise ValueError(f"gamma={gamma} must lie in ({W.lo}, {W.hi}]")
    limit = float(primitive_W(W, W.hi) - primitive_W(W, gamma))
    records = []
    for eps in cfg.eps_list:
        om_max = (cfg.r / eps) ** (1.0 - a) / (1.0 - a)
        n = int(min(2**16, max(cfg.grid * om_max, 4 * cfg.grid))) + 1
        om = np.linspace(0.0, om_max, n)
        d = eps * ((1.0 - a) * om) ** (1.0 / (1.0 - a))
        d[-1] = cfg.r
        if gamma == W.hi:
            u = np.full(n, W.hi)
            u_mid = u[:-1]
        else:
            u = wall_profile(W, gamma, om)
            u_mid = wall_profile(W, gamma, 0.5 * (om[1:] + om[:-1]))
        dd = np.diff(d)
        w_plus = (d[1:] ** (1 + a) - d[:-1] ** (1 + a)) / (1 + a)
        w_minus = (d[1:] ** (1 - a) - d[:-1] ** (1 - a)) / (1 - a)
        slope = np.diff(u) / dd
        grad = eps ** (1.0 - a) * float(np.sum(slope**2 * w_plus))
        pot = eps ** -(1.0 - a) * float(np.sum(W(u_mid) * w_minus))
        lip = float(np.max(np.abs(slope)))
        extras = {
            "nodes": n,
            "omega_max": om_max,
            "lipschitz_C": lip * eps ** (1.0 - a) / cfg.r ** (-a),
            "lipschitz_eps": lip * eps,
        }
        records.append(SweepRecord(eps, grad + pot, grad, pot, limit, extras))
    return records


_DISPATCH = {
    "interior": interior_sweep,
    "boundary": boundary_sweep,
    "sharpness": sharpness_experiment,
    "boundary-effect": boundary_effect_check,
    "wall": wall_effect_check,
}


def run(cfg: ExperimentConfig) -> Report:
    records = _DISPATCH[cfg.experiment](cfg)
    return Report(kind=f"sweep:{cfg.experiment}", config=cfg.to_dict(), records=tuple(records))


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True, default=_native) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# {REPORT_SCHEMA} version={__version__} kind={report.kind}\n")
        writer = csv.writer(buf, lineterminator="\n")
        if report.records:
            writer.writerow(CSV_COLUMNS)
            for rec in report.records:
                row = rec.row()
                writer.writerow([repr(float(row[c])) for c in CSV_COLUMNS])
        else:
            flat = _flatten(report.payload)
            writer.writerow(["key", "value"])
            for key in sorted(flat):
                writer.writerow([key, flat[key]])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}; use csv or json")


def _flatten(obj, prefix=""):
    out = {}
    obj = _native(obj)
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = repr(obj) if isinstance(obj, float) else obj
    return out


def _native(obj):
    """numpy scalars and arrays as plain Python values."""
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def emit(report: Report, path, fmt: str = "csv") -> str:
    """Write the rendered report to ``path`` (``None`` or ``-``: return only)."""
    text = render(report, fmt)
    if path is not None and str(path) != "-":
        target = Path(path)
        if not target.parent.exists():
            raise OSError(f"output directory {target.parent} does not exist")
        target.write_text(text)
    return text
