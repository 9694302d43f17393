"""Numerical companion for fractional phase-transition energies with a boundary weight."""

__version__ = "0.1.0"

from .params import DoubleWell, FracParams, Scalings, make_params, quartic_well, scalings, sigma_constant  # noqa: E402
from .special import ConstantsReport, D_s_constant  # noqa: E402
from .nonlocal_energy import TraceFn, g_energy, gagliardo  # noqa: E402
from .extension import Field2D, poisson_extend, spectral_extend, weighted_dirichlet  # noqa: E402
from .profile import ProfileSolution, kappa_s, kappa_T  # noqa: E402

__all__ = [
    "__version__",
    "DoubleWell",
    "FracParams",
    "Scalings",
    "make_params",
    "quartic_well",
    "scalings",
    "sigma_constant",
    "ConstantsReport",
    "D_s_constant",
    "TraceFn",
    "g_energy",
    "gagliardo",
    "Field2D",
    "poisson_extend",
    "spectral_extend",
    "weighted_dirichlet",
    "ProfileSolution",
    "kappa_s",
    "kappa_T",
]
