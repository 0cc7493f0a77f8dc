"""Langevin deformation between porous medium flow and Wasserstein geodesics, in 1-D.

Discrete fields and measures, Renyi entropy functionals, the Barenblatt
reference family, W-entropy diagnostics and integrators for the three regimes.
"""
from .errors import RenyiLangevinError
from .fields import C_INF, DensityField, Grid, ModelParams, PotentialField, ScalarField, WeightedMeasure
from .functionals import (
    DiagnosticsRecord,
    PotentialSpec,
    entropy_time_derivative,
    fisher_information,
    hamiltonian_lagrangian,
    kinetic_energy,
    relative_entropy,
    renyi_entropy,
    second_moment,
)
from .reference import barenblatt_build, reference_state, scaling_ode_solve
from .solvers import SolverConfig, geodesic_solve, langevin_solve, pme_solve, solve
from .wentropy import coefficients_build, w_series

__version__ = "0.1.0"

__all__ = [
    "C_INF", "DensityField", "DiagnosticsRecord", "Grid", "ModelParams", "PotentialField", "PotentialSpec",
    "RenyiLangevinError", "ScalarField", "SolverConfig", "WeightedMeasure", "barenblatt_build",
    "coefficients_build", "entropy_time_derivative", "fisher_information", "geodesic_solve",
    "hamiltonian_lagrangian", "kinetic_energy", "langevin_solve", "pme_solve", "reference_state",
    "relative_entropy", "renyi_entropy", "scaling_ode_solve", "second_moment", "solve", "w_series",
]
