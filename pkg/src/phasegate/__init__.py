"""
Design and analysis of phase-modulated two-qubit gates on a spin-dependent
force, with robustness to static and time-varying detuning errors.
"""
__version__ = "0.1.0"

from .sequence import (PhaseSequence, apply_R, base, construct, moment, to_bichromatic_phases,
                       wrap_phase)
from .model import (GateConfig, Mode, ModeSpectrum, PolynomialDrift, Sinusoid, StaticOffset,
                    validate_spectrum)
from .trajectory import displacement, displacement_noisy, endpoint, enclosed_area, sample_trajectory
from .sim import analytic_observables, fock_oracle, parity_scan, single_ion_p1
from .design import (DesignRequest, NoSolutionError, design_gate, detuning_sweep,
                     entangling_phase, solve_rabi)
from .noise import (filter_function_first_order, phase_averaged_response, plateau_width,
                    residual_p1, static_sweep)

__all__ = [
    "PhaseSequence", "apply_R", "base", "construct", "moment", "to_bichromatic_phases",
    "wrap_phase", "GateConfig", "Mode", "ModeSpectrum", "PolynomialDrift", "Sinusoid",
    "StaticOffset", "validate_spectrum", "displacement", "displacement_noisy", "endpoint",
    "enclosed_area", "sample_trajectory", "analytic_observables", "fock_oracle", "parity_scan",
    "single_ion_p1", "DesignRequest", "NoSolutionError", "design_gate", "detuning_sweep",
    "entangling_phase", "solve_rabi", "filter_function_first_order", "phase_averaged_response",
    "plateau_width", "residual_p1", "static_sweep",
]
