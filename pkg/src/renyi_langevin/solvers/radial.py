"""Finite-volume integrators on radial grids for compactly supported states.

Cells are [i h, (i+1) h] with centres at the grid nodes.  Fluxes vanish at
r = 0 (symmetry) and at the outer wall, so the discrete mass sum(V_i rho_i)
is conserved to rounding.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..errors import CFLError, SolverError, UnsupportedError, VacuumError
from ..fields import Grid, ModelParams, Regime, WeightedMeasure, unit_sphere_area
from .common import SolverConfig, Trajectory, keep_partial


class RadialCells:
    def __init__(self, grid: Grid, mu: WeightedMeasure):
        if grid.is_periodic:
            raise UnsupportedError("finite volumes here are for radial grids")
        self.grid = grid
        h = grid.h
        d = grid.ambient_dim
        omega = unit_sphere_area(d)
        faces = np.arange(grid.points + 1) * h
        ef = mu.density
        # e^{-f} at interior faces by averaging the neighbouring nodes
        ef_face = np.concatenate([[ef[0]], 0.5 * (ef[1:] + ef[:-1]), [ef[-1]]])
        self.area = omega * faces ** (d - 1) * ef_face
        self.volume = omega * (faces[1:] ** d - faces[:-1] ** d) / d * ef
        self.h = h

    def mass(self, rho: np.ndarray) -> float:
        return float(np.dot(self.volume, rho))

    def divergence(self, flux: np.ndarray) -> np.ndarray:
        """-(A F)_{i+1/2} + (A F)_{i-1/2} over V_i, for fluxes on all N+1 faces."""
        af = self.area * flux
        af[0] = 0.0
        af[-1] = 0.0
        return -(af[1:] - af[:-1]) / self.volume

    def node_gradient(self, v: np.ndarray) -> np.ndarray:
        """Centred differences with an even reflection at r = 0."""
        g = np.empty_like(v)
        g[1:-1] = (v[2:] - v[:-2]) / (2 * self.h)
        g[0] = (v[1] - v[0]) / (2 * self.h)
        g[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * self.h)
        return g


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def upwind_flux(rho: np.ndarray, vel_face: np.ndarray) -> np.ndarray:
    """MUSCL/minmod upwind flux rho*v on interior faces (length N-1)."""
    ext = np.concatenate([[rho[0]], rho, [rho[-1]]])
    slope = _minmod(ext[1:-1] - ext[:-2], ext[2:] - ext[1:-1])
    left = rho[:-1] + 0.5 * slope[:-1]
    right = rho[1:] - 0.5 * slope[1:]
    return np.where(vel_face > 0, left, right) * vel_face


def _pad(interior: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], interior, [0.0]])


def support_radius_estimate(grid: Grid, rho: np.ndarray, rel_threshold: float = 1e-10,
                            gamma: Optional[float] = None) -> float:
    """Edge of the occupied region.

    Without gamma: outer face of the last cell where rho exceeds
    rel_threshold * max(rho).  With gamma: the pressure rho^{gamma-1} is
    close to linear at a porous-medium front, so it is extrapolated to zero
    from the last two nodes above 1% of its maximum.
    """
    rho = np.asarray(rho, dtype=float)
    if gamma is None:
        idx = np.nonzero(rho > rel_threshold * float(np.max(rho)))[0]
        return float((idx[-1] + 1) * grid.h) if idx.size else 0.0
    q = np.maximum(rho, 0.0) ** (gamma - 1.0)
    idx = np.nonzero(q > 0.01 * float(np.max(q)))[0]
    if idx.size < 2:
        return float((idx[-1] + 1) * grid.h) if idx.size else 0.0
    i = idx[-1]
    x = grid.nodes
    slope = (q[i] - q[i - 1]) / (x[i] - x[i - 1])
    if slope >= 0:
        return float((i + 1) * grid.h)
    return float(x[i] - q[i] / slope)


def pme_solve_radial(rho0, gamma: float, mu: WeightedMeasure, config: SolverConfig, t0: float,
                     params: Optional[ModelParams] = None) -> Trajectory:
    """Degenerate diffusion d_t rho = div(grad rho^gamma) with SSP-RK2.

    The two point flux -(rho^gamma_{i+1} - rho^gamma_i)/h is monotone under
    dt <= h^2 / (2 gamma max rho^{gamma-1}), so the support only spreads at
    the rate the data dictate.
    """
    cells = RadialCells(mu.grid, mu)
    h = cells.h
    rho = np.array(rho0, dtype=float)
    config.check_floor(rho)

    def rhs(r):
        q = r ** gamma
        return cells.divergence(_pad(-(q[1:] - q[:-1]) / h))

    nsteps, dt = config.step_plan(t0)
    traj = Trajectory(mu.grid, mu, params=params, dt=dt, system="pme")
    pot = lambda r: -gamma * r ** (gamma - 1.0) / (gamma - 1.0)
    traj.append(t0, rho, pot(rho))
    traj.finish(t0, rho, pot(rho))
    with keep_partial(traj):
        for n in range(1, nsteps + 1):
            limit = config.cfl * 0.5 * h * h / (gamma * float(np.max(rho)) ** (gamma - 1.0))
            if dt > limit:
                t_prev = t0 + (n - 1) * dt
                raise CFLError(f"dt = {dt:.3g} exceeds the diffusion limit {limit:.3g}", time=t_prev,
                               suggested_dt=limit)
            r1 = rho + dt * rhs(rho)
            rho = 0.5 * rho + 0.5 * (r1 + dt * rhs(r1))
            t = t0 + n * dt
            if np.min(rho) < -config.density_floor - 1e-14 * float(np.max(rho)):
                raise VacuumError(f"negative undershoot {np.min(rho)!r} at t = {t}", time=t, suggested_dt=0.5 * dt)
            rho = np.maximum(rho, 0.0)
            if n % config.diagnostic_stride == 0:
                traj.append(t, rho, pot(rho))
            traj.steps = n
            traj.finish(t, rho, pot(rho))
    return traj


def transport_solve_radial(rho0, phi0, params: ModelParams, mu: WeightedMeasure, config: SolverConfig,
                           t0: float) -> Trajectory:
    """Langevin (finite c) or geodesic (c = inf) evolution with SSP-RK3.

    rho moves with the face velocity (phi_{i+1} - phi_i)/h through an upwind
    MUSCL flux; phi is advanced at the nodes from the Hamilton-Jacobi
    equation with centred gradients.
    """
    if params.regime is Regime.GRADIENT_FLOW:
        raise UnsupportedError("use pme_solve_radial for c = 0")
    cells = RadialCells(mu.grid, mu)
    h = cells.h
    gamma = params.gamma
    geodesic = params.regime is Regime.GEODESIC
    inv_c2 = 0.0 if geodesic else 1.0 / params.c2
    sign = params.potential_sign

    def rhs(r, p):
        vel = (p[1:] - p[:-1]) / h
        drho = cells.divergence(_pad(upwind_flux(r, vel)))
        g = cells.node_gradient(p)
        dphi = -0.5 * g * g
        if not geodesic:
            dphi = dphi - inv_c2 * (p + sign * gamma * r ** (gamma - 1.0) / (gamma - 1.0))
        return drho, dphi

    rho = np.array(rho0, dtype=float)
    phi = np.array(phi0, dtype=float)
    config.check_floor(rho)
    nsteps, dt = config.step_plan(t0)
    traj = Trajectory(mu.grid, mu, params=params, dt=dt, system="geodesic" if geodesic else "langevin")
    traj.append(t0, rho, phi)
    traj.finish(t0, rho, phi)
    with keep_partial(traj):
        for n in range(1, nsteps + 1):
            vmax = float(np.max(np.abs(np.diff(phi)))) / h
            sound = 0.0 if geodesic else math.sqrt(gamma * float(np.max(rho)) ** (gamma - 1.0)) / params.c
            limit = config.cfl * 0.5 * h / max(vmax + sound, 1e-300)
            if not geodesic:
                limit = min(limit, config.cfl * 0.5 * params.c2)
            if dt > limit:
                t_prev = t0 + (n - 1) * dt
                raise CFLError(f"dt = {dt:.3g} exceeds the transport limit {limit:.3g}", time=t_prev,
                               suggested_dt=limit)
            a1, b1 = rhs(rho, phi)
            r1, p1 = rho + dt * a1, phi + dt * b1
            a2, b2 = rhs(r1, p1)
            r2, p2 = 0.75 * rho + 0.25 * (r1 + dt * a2), 0.75 * phi + 0.25 * (p1 + dt * b2)
            a3, b3 = rhs(r2, p2)
            rho = rho / 3.0 + 2.0 / 3.0 * (r2 + dt * a3)
            phi = phi / 3.0 + 2.0 / 3.0 * (p2 + dt * b3)
            t = t0 + n * dt
            if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(phi))):
                raise SolverError(f"non-finite state at t = {t}", time=t)
            if np.min(rho) < -config.density_floor - 1e-14 * float(np.max(rho)):
                raise VacuumError(f"negative undershoot {np.min(rho)!r} at t = {t}", time=t, suggested_dt=0.5 * dt)
            rho = np.maximum(rho, 0.0)
            if n % config.diagnostic_stride == 0:
                traj.append(t, rho, phi)
            traj.steps = n
            traj.finish(t, rho, phi)
    return traj
