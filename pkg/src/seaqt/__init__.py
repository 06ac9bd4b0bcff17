"""Steepest-entropy-ascent dynamics of finite-dimensional quantum systems."""

__version__ = "0.1.0"

from ._backend import active_backend, set_backend
from .composite import CompositeModel, composite_generator, locality_check, partial_trace, reduced_state
from .errors import SeaError
from .generator import ConservedSet, RelaxationSpec, SystemModel, entropy_production_rate, is_nondissipative
from .onsager import onsager_report
from .operators import StateOperator, entropy, spectral_decompose
from .propagator import IntegratorConfig, Trajectory, evolve, find_equilibrium, roundtrip_error, stability_probe
from .qubit import BlochModel, bloch_rhs, central_plane_solution

__all__ = [
    "active_backend",
    "set_backend",
    "BlochModel",
    "CompositeModel",
    "ConservedSet",
    "IntegratorConfig",
    "RelaxationSpec",
    "SeaError",
    "StateOperator",
    "SystemModel",
    "Trajectory",
    "bloch_rhs",
    "central_plane_solution",
    "composite_generator",
    "entropy",
    "entropy_production_rate",
    "evolve",
    "find_equilibrium",
    "is_nondissipative",
    "locality_check",
    "onsager_report",
    "partial_trace",
    "reduced_state",
    "roundtrip_error",
    "spectral_decompose",
    "stability_probe",
]
