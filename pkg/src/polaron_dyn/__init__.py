"""Single-mode spin-boson dynamics in the polaron frame."""

__version__ = "0.1.0"

from .model import (INFINITE, DomainError, ModelParams, UnsupportedTemperatureError,
                    polaron_transform, timescales, validate)
from .propagate import (Engine, IntegrationError, QubitState, Trajectory, evolve,
                        evolve_closed_form, evolve_naive_markov, evolve_tcl_ode,
                        population_difference)
from .nonmarkov import coherence_l1, coherence_trajectory, nonmarkovianity

__all__ = [
    "INFINITE", "DomainError", "ModelParams", "UnsupportedTemperatureError",
    "polaron_transform", "timescales", "validate",
    "Engine", "IntegrationError", "QubitState", "Trajectory", "evolve",
    "evolve_closed_form", "evolve_naive_markov", "evolve_tcl_ode", "population_difference",
    "coherence_l1", "coherence_trajectory", "nonmarkovianity",
]
