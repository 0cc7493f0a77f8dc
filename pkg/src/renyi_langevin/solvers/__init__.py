"""Time integrators for the Langevin family, its two limits and the (p, u) system."""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..errors import UnsupportedError
from ..fields import DensityField, ModelParams, Regime, ScalarField, WeightedMeasure
from .common import Scheme, SolverConfig, Trajectory, suggest_dt_langevin, suggest_dt_pme, suggest_dt_transport
from .hyperbolic import HyperbolicState, HyperbolicTrajectory, hyperbolic_solve
from .periodic import (
    SpectralOps,
    _rk4_step,
    geodesic_solve_periodic,
    langevin_rhs,
    langevin_solve_periodic,
    pme_solve_periodic,
)
from .radial import RadialCells, pme_solve_radial, support_radius_estimate, transport_solve_radial


def _values(x):
    return np.asarray(x.values if isinstance(x, ScalarField) else x, dtype=float)


def langevin_step(rho, phi, params: ModelParams, mu: WeightedMeasure, config: SolverConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Advance (rho, phi) by one step of size config.dt on a periodic grid (RK4)."""
    if not mu.grid.is_periodic:
        raise UnsupportedError("single steps are exposed for the periodic integrator")
    ops = SpectralOps(mu.grid, mu, config.dealias)
    state = _rk4_step(langevin_rhs(ops, params), (_values(rho), _values(phi)), config.dt)
    return tuple(ops.filter(s) for s in state)


def langevin_solve(rho0, phi0, params: ModelParams, mu: WeightedMeasure, config: SolverConfig,
                   t0: float = 0.0) -> Trajectory:
    if params.regime is not Regime.LANGEVIN:
        raise UnsupportedError("langevin_solve needs finite c > 0")
    if mu.grid.is_periodic:
        return langevin_solve_periodic(_values(rho0), _values(phi0), params, mu, config, t0)
    return transport_solve_radial(_values(rho0), _values(phi0), params, mu, config, t0)


def pme_solve(rho0, gamma: float, mu: WeightedMeasure, config: SolverConfig, t0: float = 0.0,
              params: Optional[ModelParams] = None) -> Trajectory:
    """Porous medium flow d_t rho = L rho^gamma; phi = -gamma rho^{gamma-1}/(gamma-1) is recorded."""
    if mu.grid.is_periodic:
        return pme_solve_periodic(_values(rho0), gamma, mu, config, t0, params)
    return pme_solve_radial(_values(rho0), gamma, mu, config, t0, params)


def geodesic_solve(rho0, phi0, mu: WeightedMeasure, config: SolverConfig, t0: float = 0.0,
                   params: Optional[ModelParams] = None) -> Trajectory:
    if mu.grid.is_periodic:
        return geodesic_solve_periodic(_values(rho0), _values(phi0), mu, config, t0, params)
    if params is None:
        raise UnsupportedError("radial geodesic runs need model parameters")
    return transport_solve_radial(_values(rho0), _values(phi0), params.replace(c="inf"), mu, config, t0)


def solve(rho0, phi0, params: ModelParams, mu: WeightedMeasure, config: SolverConfig, t0: float = 0.0) -> Trajectory:
    """Dispatch on the regime of params."""
    if params.regime is Regime.GRADIENT_FLOW:
        return pme_solve(rho0, params.gamma, mu, config, t0, params)
    if params.regime is Regime.GEODESIC:
        return geodesic_solve(rho0, phi0, mu, config, t0, params)
    return langevin_solve(rho0, phi0, params, mu, config, t0)


__all__ = [
    "HyperbolicState", "HyperbolicTrajectory", "RadialCells", "Scheme", "SolverConfig", "Trajectory",
    "geodesic_solve", "hyperbolic_solve", "langevin_solve", "langevin_step", "pme_solve", "solve",
    "suggest_dt_langevin", "suggest_dt_pme", "suggest_dt_transport", "support_radius_estimate",
]
