"""Spectral RK4 integrators on the periodic grid (strictly positive densities)."""
from __future__ import annotations

import math
from typing import Callable, Optional, Tuple

import numpy as np

from ..errors import CausticError, CFLError, SolverError, UnsupportedError, VacuumError
from ..fields import Grid, ModelParams, Regime, WeightedMeasure
from .common import (
    keep_partial,
    SolverConfig,
    Trajectory,
    suggest_dt_langevin,
    suggest_dt_pme,
    suggest_dt_transport,
)


class SpectralOps:
    """Derivative, weighted divergence and 2/3 filter on one periodic grid."""

    def __init__(self, grid: Grid, mu: WeightedMeasure, dealias: bool = False):
        if not grid.is_periodic:
            raise UnsupportedError("spectral integrators need a periodic grid")
        self.grid = grid
        self.w = mu.density
        self.winv = np.exp(mu.f_samples)
        k = grid.wavenumbers
        self.ik = 1j * k
        if grid.points % 2 == 0:
            self.ik[grid.points // 2] = 0.0
        self.mask = None
        if dealias:
            self.mask = np.abs(k) <= (grid.points // 3) * (2 * math.pi / grid.length)

    def d(self, v: np.ndarray) -> np.ndarray:
        return np.real(np.fft.ifft(self.ik * np.fft.fft(v)))

    def transport(self, rho: np.ndarray, vel: np.ndarray) -> np.ndarray:
        """-e^{f} (e^{-f} rho vel)', the weighted continuity right-hand side."""
        return -self.winv * self.d(self.w * rho * vel)

    def filter(self, v: np.ndarray) -> np.ndarray:
        if self.mask is None:
            return v
        return np.real(np.fft.ifft(np.where(self.mask, np.fft.fft(v), 0.0)))


def _rk4_step(rhs: Callable, state: Tuple[np.ndarray, ...], dt: float):
    k1 = rhs(*state)
    s2 = tuple(s + 0.5 * dt * k for s, k in zip(state, k1))
    k2 = rhs(*s2)
    s3 = tuple(s + 0.5 * dt * k for s, k in zip(state, k2))
    k3 = rhs(*s3)
    s4 = tuple(s + dt * k for s, k in zip(state, k3))
    k4 = rhs(*s4)
    return tuple(s + dt / 6.0 * (a + 2 * b + 2 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4))


def _check_positive(rho: np.ndarray, floor: float, t: float):
    lo = float(np.min(rho))
    if not math.isfinite(lo) or lo <= floor:
        raise VacuumError(f"density fell to {lo!r} (floor {floor}) at t = {t}", time=t)


def _pressure(rho, gamma):
    return gamma * rho ** (gamma - 1.0) / (gamma - 1.0)


def langevin_rhs(ops: SpectralOps, params: ModelParams):
    gamma = params.gamma
    sign = params.potential_sign
    inv_c2 = 1.0 / params.c2

    def rhs(rho, phi):
        dphi = ops.d(phi)
        drho = ops.transport(rho, dphi)
        dphi_t = -0.5 * dphi * dphi - inv_c2 * (phi + sign * _pressure(rho, gamma))
        return drho, dphi_t

    return rhs


def geodesic_rhs(ops: SpectralOps):
    def rhs(rho, phi):
        dphi = ops.d(phi)
        return ops.transport(rho, dphi), -0.5 * dphi * dphi

    return rhs


def pme_rhs(ops: SpectralOps, gamma: float):
    def rhs(rho):
        return (ops.winv * ops.d(ops.w * ops.d(rho ** gamma)),)

    return rhs


def _run(system: str, ops: SpectralOps, rhs, state, t0: float, config: SolverConfig, mu: WeightedMeasure,
         params: Optional[ModelParams], dt_limit: Callable, potential: Callable) -> Trajectory:
    grid = ops.grid
    nsteps, dt = config.step_plan(t0)
    traj = Trajectory(grid, mu, params=params, dt=dt, system=system)
    _check_positive(state[0], config.density_floor, t0)
    traj.append(t0, state[0], potential(state))
    traj.finish(t0, state[0], potential(state))
    # a spectral grid caps |phi''| near h^-1 |phi'|, so steepening relative to the
    # initial curvature (the compression factor of the characteristics) is also watched
    kappa0 = float(np.max(np.abs(ops.d(ops.d(state[1]))))) if system == "geodesic" else 0.0
    with keep_partial(traj):
        for n in range(1, nsteps + 1):
            t_prev = t0 + (n - 1) * dt
            limit = dt_limit(state)
            if dt > limit:
                raise CFLError(f"dt = {dt:.3g} exceeds the stability limit {limit:.3g} at t = {t_prev}",
                               time=t_prev, suggested_dt=limit)
            state = _rk4_step(rhs, state, dt)
            state = tuple(ops.filter(s) for s in state)
            t = t0 + n * dt
            if not all(np.all(np.isfinite(s)) for s in state):
                raise SolverError(f"non-finite state at t = {t}", time=t)
            _check_positive(state[0], config.density_floor, t)
            if system == "geodesic":
                curv = float(np.max(np.abs(ops.d(ops.d(state[1])))))
                if curv * dt > config.caustic_threshold:
                    raise CausticError(f"|phi''| dt = {curv * dt:.3g} signals a caustic near t = {t}", time=t)
                if kappa0 > 0 and curv * config.caustic_threshold > kappa0:
                    raise CausticError(f"|phi''| grew {curv / kappa0:.3g}-fold, a caustic is near t = {t}", time=t)
            if n % config.diagnostic_stride == 0:
                traj.append(t, state[0], potential(state))
            traj.steps = n
            traj.finish(t, state[0], potential(state))
    return traj


def langevin_solve_periodic(rho0, phi0, params: ModelParams, mu: WeightedMeasure, config: SolverConfig,
                            t0: float = 0.0) -> Trajectory:
    if params.regime is not Regime.LANGEVIN:
        raise UnsupportedError("the Langevin integrator needs finite c > 0")
    ops = SpectralOps(mu.grid, mu, config.dealias)
    config.check_floor(rho0)

    def limit(state):
        return suggest_dt_langevin(state[0], ops.d(state[1]), params, ops.grid, config.cfl)

    return _run("langevin", ops, langevin_rhs(ops, params),
                (np.array(rho0, dtype=float), np.array(phi0, dtype=float)), t0, config, mu, params, limit,
                lambda s: s[1])


def geodesic_solve_periodic(rho0, phi0, mu: WeightedMeasure, config: SolverConfig, t0: float = 0.0,
                            params: Optional[ModelParams] = None) -> Trajectory:
    ops = SpectralOps(mu.grid, mu, config.dealias)
    config.check_floor(rho0)

    def limit(state):
        return suggest_dt_transport(ops.grid, float(np.max(np.abs(ops.d(state[1])))), config.cfl)

    return _run("geodesic", ops, geodesic_rhs(ops),
                (np.array(rho0, dtype=float), np.array(phi0, dtype=float)), t0, config, mu, params, limit,
                lambda s: s[1])


def pme_solve_periodic(rho0, gamma: float, mu: WeightedMeasure, config: SolverConfig, t0: float = 0.0,
                       params: Optional[ModelParams] = None) -> Trajectory:
    ops = SpectralOps(mu.grid, mu, config.dealias)
    config.check_floor(rho0)

    def limit(state):
        return suggest_dt_pme(state[0], gamma, ops.grid, config.cfl)

    return _run("pme", ops, pme_rhs(ops, gamma), (np.array(rho0, dtype=float),), t0, config, mu, params, limit,
                lambda s: -_pressure(s[0], gamma))
