"""Two trapped ions entangled through the light field between two parabolic mirrors.

Modules
-------
levels      hyperfine level scheme and transition dipoles
geometry    mirror aperture dyadic, reflection losses and pupil fields
dynamics    delayed amplitude equations solved in closed form
density     two-ion ground-state density matrix and postselection
postselect  dispersive probing and minimum-error discrimination
budget      repetition and entanglement rates
cli         command-line interface
"""
from .budget import BudgetLedger, entanglement_rate, repetition_rate
from .density import closed_form_post, ground_density, postselect, simulate_post
from .dynamics import build_kernel, evolve, standard_initial_state
from .geometry import MirrorGeometry, efficiency_eta, gamma_rel, helicity_cross_overlap
from .levels import LevelScheme, ZeemanConfig, build_level_scheme
from .postselect import ProbeConfig, helstrom_error, postselection_fidelity, success_reduction

__version__ = "0.1.0"

__all__ = [
    "BudgetLedger",
    "LevelScheme",
    "MirrorGeometry",
    "ProbeConfig",
    "ZeemanConfig",
    "build_kernel",
    "build_level_scheme",
    "closed_form_post",
    "efficiency_eta",
    "entanglement_rate",
    "evolve",
    "gamma_rel",
    "ground_density",
    "helicity_cross_overlap",
    "helstrom_error",
    "standard_initial_state",
    "postselect",
    "postselection_fidelity",
    "repetition_rate",
    "simulate_post",
    "success_reduction",
]
