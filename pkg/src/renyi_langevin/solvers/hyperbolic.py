"""Velocity formulation (p, u) of the Langevin system on the periodic grid.

With p = (rho^{gamma-1} - 1)/(gamma-1) and u = phi' the system reads

    p_t + u p_x + ((gamma-1) p + 1) u_x = 0
    u_t + u u_x + (gamma/c^2) p_x + u/c^2 = 0

which is symmetric hyperbolic after multiplying by A0 = diag(1/((gamma-1)p+1), c^2/gamma).
Only f = 0 and the +Ent system are covered.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import CFLError, SolverError, UnsupportedError, VacuumError
from ..fields import Grid
from .common import RK4_IMAG, RK4_REAL, SolverConfig, keep_partial
from .periodic import _rk4_step


@dataclass(frozen=True)
class HyperbolicState:
    grid: Grid
    p: np.ndarray
    u: np.ndarray
    gamma: float
    c: float

    def __post_init__(self):
        if not self.grid.is_periodic:
            raise UnsupportedError("the (p, u) solver runs on periodic grids")
        if self.c == 0 or not math.isfinite(float(self.c)):
            raise UnsupportedError("the (p, u) system needs finite c > 0")

    @classmethod
    def from_density(cls, grid: Grid, rho, dphi, gamma: float, c: float) -> "HyperbolicState":
        rho = np.asarray(rho, dtype=float)
        return cls(grid, (rho ** (gamma - 1.0) - 1.0) / (gamma - 1.0), np.asarray(dphi, dtype=float), gamma, c)

    @property
    def sound_factor(self) -> np.ndarray:
        """(gamma-1) p + 1 = rho^{gamma-1}."""
        return (self.gamma - 1.0) * self.p + 1.0

    @property
    def density(self) -> np.ndarray:
        return self.sound_factor ** (1.0 / (self.gamma - 1.0))

    def A0(self) -> np.ndarray:
        """Diagonal blocks of A0 per node, shape (N, 2)."""
        return np.stack([1.0 / self.sound_factor, np.full(self.p.shape, self.c ** 2 / self.gamma)], axis=1)

    def A1(self) -> np.ndarray:
        """Symmetric flux matrix per node, shape (N, 2, 2)."""
        q = self.sound_factor
        out = np.empty((self.p.size, 2, 2))
        out[:, 0, 0] = self.u / q
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = 1.0
        out[:, 1, 1] = self.c ** 2 / self.gamma * self.u
        return out

    def B(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [0.0, 1.0 / self.gamma]])

    def energy(self) -> float:
        """<A0 U, U> with the rectangle rule."""
        a0 = self.A0()
        return float(self.grid.h * np.sum(a0[:, 0] * self.p ** 2 + a0[:, 1] * self.u ** 2))

    def energy_rate(self, ux: np.ndarray) -> float:
        """<(d_t A0 + d_x A1) U, U> - 2 <B U, U>, with the divergence in closed form."""
        g, c2 = self.gamma, self.c ** 2
        dens = g * ux * self.p ** 2 / self.sound_factor + c2 / g * ux * self.u ** 2 - 2.0 / g * self.u ** 2
        return float(self.grid.h * np.sum(dens))


@dataclass
class HyperbolicTrajectory:
    times: List[float] = field(default_factory=list)
    states: List[HyperbolicState] = field(default_factory=list)
    dt: float = math.nan
    final: Optional[HyperbolicState] = None
    error: Optional[Exception] = None


def _spectral_d(grid: Grid):
    ik = 1j * grid.wavenumbers
    if grid.points % 2 == 0:
        ik[grid.points // 2] = 0.0
    return lambda v: np.real(np.fft.ifft(ik * np.fft.fft(v)))


def hyperbolic_solve(state0: HyperbolicState, config: SolverConfig, t0: float = 0.0) -> HyperbolicTrajectory:
    grid = state0.grid
    g, c2 = state0.gamma, state0.c ** 2
    d = _spectral_d(grid)

    def rhs(p, u):
        px, ux = d(p), d(u)
        return -u * px - ((g - 1.0) * p + 1.0) * ux, -u * ux - (g / c2) * px - u / c2

    nsteps, dt = config.step_plan(t0)
    out = HyperbolicTrajectory(dt=dt)
    state = (np.array(state0.p, dtype=float), np.array(state0.u, dtype=float))
    out.times.append(t0)
    out.states.append(state0)
    out.final = state0
    kmax = math.pi / grid.h
    with keep_partial(out):
        for n in range(1, nsteps + 1):
            q = (g - 1.0) * state[0] + 1.0
            if float(np.min(q)) <= config.density_floor:
                raise VacuumError(f"(gamma-1)p + 1 fell to {float(np.min(q))!r}", time=t0 + (n - 1) * dt)
            speed = float(np.max(np.abs(state[1]))) + math.sqrt(g * float(np.max(q)) / c2)
            limit = config.cfl * min(RK4_IMAG / (kmax * speed), RK4_REAL * c2)
            if dt > limit:
                raise CFLError(f"dt = {dt:.3g} exceeds {limit:.3g}", time=t0 + (n - 1) * dt, suggested_dt=limit)
            state = _rk4_step(rhs, state, dt)
            if not all(np.all(np.isfinite(s)) for s in state):
                raise SolverError("non-finite (p, u) state", time=t0 + n * dt)
            if n % config.diagnostic_stride == 0:
                out.times.append(t0 + n * dt)
                out.states.append(HyperbolicState(grid, state[0], state[1], g, state0.c))
            out.final = HyperbolicState(grid, state[0], state[1], g, state0.c)
    return out
