"""Spectral-projection fixed points for Hartree-Fock equations of atoms at large nuclear charge."""

from .core import (
    Configuration,
    ConfigurationError,
    GapReport,
    GapViolationError,
    HFProjError,
    RadialGrid,
    SpectralWindow,
    SymmetryError,
    build_grid,
    build_window,
    derive_counts,
    z_thresholds,
)
from .fixedpoint import limit_study, lipschitz_estimate, solve, uniqueness_probe
from .hartree import restricted_minimize, segregation_scan, unrestricted_minimize
from .operators import DensityState, fock_channel, hf_energy, kinetic_nuclear_matrix
from .spectral import distances, hydrogenic_state, projection_bound_check, projection_step

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "ConfigurationError",
    "DensityState",
    "GapReport",
    "GapViolationError",
    "HFProjError",
    "RadialGrid",
    "SpectralWindow",
    "SymmetryError",
    "build_grid",
    "build_window",
    "derive_counts",
    "distances",
    "fock_channel",
    "hf_energy",
    "hydrogenic_state",
    "kinetic_nuclear_matrix",
    "limit_study",
    "lipschitz_estimate",
    "projection_bound_check",
    "projection_step",
    "restricted_minimize",
    "segregation_scan",
    "solve",
    "uniqueness_probe",
    "unrestricted_minimize",
    "z_thresholds",
]
