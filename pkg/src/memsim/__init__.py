"""Readout simulator for cavity-assisted atomic Raman memories with four-wave mixing noise."""

from .params import PhysicalParams, derive_rates, validate_regime
from .signal import make_target_mode, mode_width_check
from .control import synthesize
from .dynamics import build_propagator, verify_impedance_matching
from .noise import compute_budget
from .pipeline import solve_duration

__all__ = ["PhysicalParams", "derive_rates", "validate_regime", "make_target_mode",
           "mode_width_check", "synthesize", "build_propagator",
           "verify_impedance_matching", "compute_budget", "solve_duration"]
__version__ = "0.1.0"
