"""Solver configuration, trajectories and step-size helpers."""
from __future__ import annotations

import contextlib
import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import ConfigurationError, SolverError
from ..fields import DensityField, Grid, ModelParams, PotentialField, WeightedMeasure

# stability reach of classical RK4 along the imaginary and negative real axes
RK4_IMAG = 2.8
RK4_REAL = 2.78


class Scheme(str, enum.Enum):
    SPECTRAL_RK4 = "spectral-rk4"
    CENTRAL_UPWIND = "central-upwind"


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    cfl: float = 0.9
    scheme: Scheme = Scheme.SPECTRAL_RK4
    density_floor: float = 0.0
    diagnostic_stride: int = 1
    dealias: bool = False
    caustic_threshold: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError("dt must be positive")
        if not 0 < self.cfl <= 1:
            raise ConfigurationError("cfl must lie in (0, 1]")
        if self.density_floor < 0:
            raise ConfigurationError("density_floor must be >= 0")
        if int(self.diagnostic_stride) != self.diagnostic_stride or self.diagnostic_stride < 1:
            raise ConfigurationError("diagnostic_stride must be a positive integer")

    def step_plan(self, t0: float):
        """(number of steps, effective dt) covering [t0, t_end] exactly."""
        span = self.t_end - t0
        if not span > 0:
            raise ConfigurationError("t_end must exceed the start time")
        n = max(1, int(math.ceil(span / self.dt - 1e-9)))
        return n, span / n

    def check_floor(self, rho0: np.ndarray):
        if self.density_floor > 0 and self.density_floor >= 1e-6 * float(np.max(rho0)):
            raise ConfigurationError("density_floor must stay below 1e-6 of the initial maximum")


@dataclass
class Trajectory:
    """Snapshots of a run at the diagnostic times."""

    grid: Grid
    measure: WeightedMeasure
    times: List[float] = field(default_factory=list)
    rhos: List[DensityField] = field(default_factory=list)
    phis: List[PotentialField] = field(default_factory=list)
    params: Optional[ModelParams] = None
    dt: float = math.nan
    steps: int = 0
    system: str = ""
    error: Optional[Exception] = None
    # state at the last completed step, whether or not it fell on the stride
    final_time: float = math.nan
    final_rho: Optional[np.ndarray] = None
    final_phi: Optional[np.ndarray] = None

    def append(self, t: float, rho: np.ndarray, phi: np.ndarray, support_radius=None):
        self.times.append(float(t))
        self.rhos.append(DensityField(self.grid, rho, support_radius=support_radius))
        self.phis.append(PotentialField(self.grid, phi, support_radius=support_radius))

    def finish(self, t: float, rho: np.ndarray, phi: np.ndarray):
        self.final_time = float(t)
        self.final_rho = np.array(rho, dtype=float)
        self.final_phi = np.array(phi, dtype=float)

    @property
    def time_array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    @property
    def diagnostic_spacing(self) -> float:
        t = self.time_array
        return float(t[1] - t[0]) if t.size > 1 else math.nan

    def __len__(self):
        return len(self.times)


@contextlib.contextmanager
def keep_partial(traj):
    """Attach the samples collected so far to any solver error raised inside."""
    try:
        yield traj
    except SolverError as exc:
        exc.trajectory = traj
        traj.error = exc
        raise


# ---------------------------------------------------------------- step-size helpers


def _max_wavenumber(grid: Grid) -> float:
    return math.pi / grid.h


def suggest_dt_transport(grid: Grid, speed: float, cfl: float = 0.9) -> float:
    """Largest stable dt for spectral advection at the given speed."""
    if grid.is_periodic:
        return cfl * RK4_IMAG / (_max_wavenumber(grid) * max(speed, 1e-300))
    return cfl * 0.5 * grid.h / max(speed, 1e-300)


def suggest_dt_pme(rho: np.ndarray, gamma: float, grid: Grid, cfl: float = 0.9) -> float:
    """Explicit diffusion limit with D = gamma rho^{gamma-1}."""
    D = gamma * float(np.max(rho)) ** (gamma - 1.0)
    if grid.is_periodic:
        return cfl * RK4_REAL / (D * _max_wavenumber(grid) ** 2)
    return cfl * 0.5 * grid.h ** 2 / D


def suggest_dt_langevin(rho: np.ndarray, dphi: np.ndarray, params: ModelParams, grid: Grid,
                        cfl: float = 0.9) -> float:
    """Transport plus sound speed sqrt(gamma rho^{gamma-1})/c, and the 1/c^2 relaxation bound."""
    sound = math.sqrt(params.gamma * float(np.max(rho)) ** (params.gamma - 1.0)) / params.c
    speed = float(np.max(np.abs(dphi))) + sound
    relax = cfl * RK4_REAL * params.c2 if grid.is_periodic else cfl * 0.5 * params.c2
    return min(suggest_dt_transport(grid, speed, cfl), relax)
