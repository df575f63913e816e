"""Positive-P simulation of self-induced transparency and soliton amplitude squeezing."""

__version__ = "0.1.0"

from .params import PhysicalParams, DerivedRates, derive_rates, thermal_occupation, dipole_coupling
from .medium import Lineshape, FrequencyGrid, AtomicState, discretize_lineshape, doppler_width, init_ground_state
from .field import TauGrid, FieldState, sech_soliton, scale_to_area
from .noise import NoiseToggles, NoiseStreams, sample_xi, assemble_field_noise, assemble_atomic_noise
from .integrator import StepScheme, TrajectoryResult, step_atoms, step_field, propagate
from .observables import pulse_area, pulse_energy, squeezing_ratio, absorption, uncertainty, SqueezingCurve
from .config import RunConfig, load_config, load_named
from .ensemble import EnsembleStats, run_ensemble, sweep

__all__ = [
    "PhysicalParams", "DerivedRates", "derive_rates", "thermal_occupation", "dipole_coupling",
    "Lineshape", "FrequencyGrid", "AtomicState", "discretize_lineshape", "doppler_width", "init_ground_state",
    "TauGrid", "FieldState", "sech_soliton", "scale_to_area",
    "NoiseToggles", "NoiseStreams", "sample_xi", "assemble_field_noise", "assemble_atomic_noise",
    "StepScheme", "TrajectoryResult", "step_atoms", "step_field", "propagate",
    "pulse_area", "pulse_energy", "squeezing_ratio", "absorption", "uncertainty", "SqueezingCurve",
    "RunConfig", "load_config", "load_named",
    "EnsembleStats", "run_ensemble", "sweep",
]
