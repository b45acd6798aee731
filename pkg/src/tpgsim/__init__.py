"""Simulation of mono-stimulated triple-photon generation in KTP."""

from .dispersion import CrystalDispersion, eigen_indices, ktp, load_crystal, principal_index
from .errors import DomainError, NoRoot, NonConvergence, TPGError, ValidationError
from .phase_matching import ProcessSpec, delta_k_collinear, linearize, pm_curve, solve_degenerate_pm
from .tpg_model import CouplingInputs, analytic_flux, flux_density, integrate_flux

__version__ = "0.1.0"

__all__ = [
    "CouplingInputs",
    "CrystalDispersion",
    "DomainError",
    "NoRoot",
    "NonConvergence",
    "ProcessSpec",
    "TPGError",
    "ValidationError",
    "analytic_flux",
    "delta_k_collinear",
    "eigen_indices",
    "flux_density",
    "integrate_flux",
    "ktp",
    "linearize",
    "load_crystal",
    "pm_curve",
    "principal_index",
    "solve_degenerate_pm",
]
