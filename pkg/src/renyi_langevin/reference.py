"""Self-similar reference solutions built on the Barenblatt profile.

The profile solves  gamma/(gamma-1) rho0^{gamma-1}(y) = max(lam - k|y|^2/2, 0)
with lam fixed by unit mass.  Rescaling by a time dependent factor u(t)
gives exact solutions of all three regimes as long as u follows the scaling
ODE  c^2 u'' + u' = k u^{1-1/k}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize as sp_optimize
from scipy.interpolate import CubicHermiteSpline

from .errors import BlowUpError, ConfigurationError, DomainError, UnsupportedError
from .fields import (
    C_INF,
    DensityField,
    Grid,
    ModelParams,
    PotentialField,
    Regime,
    parse_speed,
    unit_sphere_area,
)

ROOT_TOL = 1e-12


@dataclass(frozen=True)
class BarenblattProfile:
    gamma: float
    m: float
    k: float
    lam: float
    A: float
    M2: float

    @property
    def support_radius(self) -> float:
        return math.sqrt(2.0 * self.lam / self.k)

    @property
    def pressure_exponent(self) -> float:
        return 1.0 / (self.gamma - 1.0)

    def density(self, y) -> np.ndarray:
        """rho0 at radius |y|."""
        y = np.asarray(y, dtype=float)
        base = np.maximum(self.lam - 0.5 * self.k * y * y, 0.0)
        return ((self.gamma - 1.0) / self.gamma * base) ** self.pressure_exponent

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.gamma, self.m, n=max(1, int(math.floor(self.m))), c=0.0)


def _radial_moment(gamma, m, k, lam, power, exponent):
    """omega_{m-1} int_0^R r^{m-1+power} rho0(r)^exponent dr, via a Jacobi weight.

    With r = R s the profile is C (1-s)^q (1+s)^q, so the endpoint
    singularity is absorbed into scipy's algebraic weight.
    """
    q = exponent / (gamma - 1.0)
    R = math.sqrt(2.0 * lam / k)
    C = ((gamma - 1.0) / gamma * lam) ** q
    val, _ = sp_integrate.quad(
        lambda s: s ** (m - 1 + power) * (1.0 + s) ** q,
        0.0, 1.0, weight="alg", wvar=(0.0, q), epsabs=1e-15, epsrel=1e-13, limit=200,
    )
    return unit_sphere_area(m) * C * R ** (m + power) * val


def profile_mass(gamma: float, m: float, lam: float) -> float:
    k = 1.0 / (m * (gamma - 1.0) + 2.0)
    return _radial_moment(gamma, m, k, lam, 0, 1.0)


def barenblatt_build(gamma: float, m: float) -> BarenblattProfile:
    """Normalise the Barenblatt profile by bracketed root finding on the mass."""
    if not gamma > 1:
        raise ConfigurationError("gamma must exceed 1")
    if not m >= 1:
        raise ConfigurationError("m must be >= 1")
    k = 1.0 / (m * (gamma - 1.0) + 2.0)

    def excess(lam):
        return profile_mass(gamma, m, lam) - 1.0

    lo, hi = 1e-6, 1.0
    for _ in range(200):
        if excess(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    while excess(lo) > 0 and lo > 1e-300:
        lo *= 0.5
    if not (excess(lo) < 0 < excess(hi)):
        raise ConfigurationError(f"could not bracket the normalisation for gamma={gamma}, m={m}")
    lam = sp_optimize.brentq(excess, lo, hi, xtol=ROOT_TOL * 1e-3, rtol=4 * np.finfo(float).eps, maxiter=500)
    A = _radial_moment(gamma, m, k, lam, 0, gamma) / (gamma - 1.0)
    M2 = 0.5 * _radial_moment(gamma, m, k, lam, 2, 1.0)
    return BarenblattProfile(gamma=gamma, m=m, k=k, lam=lam, A=A, M2=M2)


# ---------------------------------------------------------------- scaling path


def _rk4(rhs, y0: np.ndarray, t0: float, dt: float, nsteps: int, guard=None):
    ys = np.empty((nsteps + 1, y0.size))
    ys[0] = y0
    y = y0.astype(float)
    t = t0
    for i in range(nsteps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * dt
        if guard is not None:
            guard(t, y)
        ys[i + 1] = y
    return ys


def _time_grid(delta: float, T: float, dt: float) -> Tuple[np.ndarray, float]:
    if not delta > 0:
        raise ConfigurationError("start time delta must be positive")
    if not T > delta:
        raise ConfigurationError("final time must exceed the start time")
    n = max(1, int(math.ceil((T - delta) / dt - 1e-9)))
    step = (T - delta) / n
    return delta + step * np.arange(n + 1), step


def _default_dt(c) -> float:
    if c is C_INF or c == 0:
        return 1e-3
    return min(1e-3, 0.25 * c * c)


@dataclass(frozen=True)
class ScalingSolution:
    """Sampled path of the scale factor u and the coefficients of the reference potential."""

    c: object
    k: float
    times: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    beta1: Optional[np.ndarray] = None
    beta1_rate: Optional[np.ndarray] = None
    alpha2_constants: Tuple[float, float] = (1.0, 0.0)
    residual: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def regime(self) -> Regime:
        if self.c is C_INF:
            return Regime.GEODESIC
        return Regime.GRADIENT_FLOW if self.c == 0 else Regime.LANGEVIN

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def _second(self, u, up):
        if self.regime is Regime.GEODESIC:
            return np.zeros_like(u)
        if self.regime is Regime.GRADIENT_FLOW:
            # differentiate u' = k u^{1-1/k}
            return self.k * (1 - 1 / self.k) * u ** (-1 / self.k) * up
        return (self.k * u ** (1 - 1 / self.k) - up) / (self.c * self.c)

    def _check_range(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.times[0], self.times[-1]
        span = 1e-9 * (hi - lo)
        if np.any(t < lo - span) or np.any(t > hi + span):
            raise DomainError(f"time outside the integrated range [{lo}, {hi}]")
        return np.clip(t, lo, hi)

    def evaluate(self, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, u', u'') at arbitrary times by Hermite interpolation of (u, u')."""
        t = self._check_range(t)
        u2 = self._second(self.u, self.u_prime)
        u = CubicHermiteSpline(self.times, self.u, self.u_prime)(t)
        up = CubicHermiteSpline(self.times, self.u_prime, u2)(t)
        return u, up, self._second(u, up)

    def alpha1(self, t) -> np.ndarray:
        u, up, _ = self.evaluate(t)
        return up / u

    def beta1_at(self, t) -> np.ndarray:
        if self.beta1 is None:
            raise ConfigurationError("beta1 path was not integrated (use beta1_solve)")
        t = self._check_range(t)
        return CubicHermiteSpline(self.times, self.beta1, self.beta1_rate)(t)

    def with_beta1(self, beta1: np.ndarray, rate: np.ndarray) -> "ScalingSolution":
        return replace(self, beta1=np.asarray(beta1, dtype=float), beta1_rate=np.asarray(rate, dtype=float))


def scaling_ode_solve(c, k: float, u_delta: float, u_prime_delta: Optional[float], interval: Sequence[float],
                      dt: Optional[float] = None) -> ScalingSolution:
    """Integrate c^2 u'' + u' = k u^{1-1/k} on [delta, T] with classical RK4.

    c = 0 integrates the reduced first order form u' = k u^{1-1/k} (u'_delta
    is then ignored); c = inf integrates u'' = 0.
    """
    c = parse_speed(c)
    if not 0 < k <= 0.5:
        raise ConfigurationError("k must lie in (0, 1/2]")
    if not u_delta > 0:
        raise ConfigurationError("u(delta) must be positive")
    delta, T = float(interval[0]), float(interval[1])
    times, step = _time_grid(delta, T, dt or _default_dt(c))
    expo = 1.0 - 1.0 / k

    def guard(t, y):
        if not np.all(np.isfinite(y)) or y[0] <= 0:
            raise BlowUpError(f"scale factor u left (0, inf) near t = {t}", time=t)

    if c is not C_INF and c == 0:
        ys = _rk4(lambda t, y: np.array([k * y[0] ** expo]), np.array([u_delta]), delta, step,
                  times.size - 1, guard)
        u = ys[:, 0]
        up = k * u ** expo
    else:
        if u_prime_delta is None:
            raise ConfigurationError("u'(delta) is required for c > 0")
        if c is C_INF:
            rhs = lambda t, y: np.array([y[1], 0.0])
        else:
            c2 = c * c
            rhs = lambda t, y: np.array([y[1], (k * y[0] ** expo - y[1]) / c2])
        ys = _rk4(rhs, np.array([u_delta, u_prime_delta]), delta, step, times.size - 1, guard)
        u, up = ys[:, 0], ys[:, 1]
    sol = ScalingSolution(c=c, k=k, times=times, u=u, u_prime=up)
    object.__setattr__(sol, "residual", scaling_residual(sol))
    return sol


def scaling_residual(sol: ScalingSolution) -> np.ndarray:
    """Residual of the scaling ODE with u'' taken by finite differences of u'."""
    u, up = sol.u, sol.u_prime
    if sol.times.size < 3:
        return np.zeros_like(u)
    upp = np.gradient(up, sol.times, edge_order=2)
    if sol.regime is Regime.GEODESIC:
        return upp
    force = sol.k * u ** (1 - 1 / sol.k)
    if sol.regime is Regime.GRADIENT_FLOW:
        return np.gradient(u, sol.times, edge_order=2) - force
    return sol.c * sol.c * upp + up - force


def beta1_solve(scaling: ScalingSolution, lam: float, gamma: float, m: float,
                beta1_delta: Optional[float] = None) -> ScalingSolution:
    """Attach the constant-term coefficient beta1 of the reference potential.

    Finite c integrates  c^2 b' + b + lam u^{-(gamma-1)m} = 0  jointly with
    the u system (so u is reproduced exactly); c = 0 uses the algebraic
    limit and c = inf keeps b constant.
    """
    c = scaling.c
    expo = -(gamma - 1.0) * m
    u0 = scaling.u[0]
    if beta1_delta is None:
        beta1_delta = -lam * u0 ** expo
    if scaling.regime is Regime.GRADIENT_FLOW:
        beta = -lam * scaling.u ** expo
        rate = -lam * expo * scaling.u ** (expo - 1) * scaling.u_prime
        return scaling.with_beta1(beta, rate)
    if scaling.regime is Regime.GEODESIC:
        beta = np.full(scaling.u.size, float(beta1_delta))
        return scaling.with_beta1(beta, np.zeros_like(beta))
    c2 = c * c
    k = scaling.k
    ku = 1.0 - 1.0 / k

    def rhs(t, y):
        return np.array([y[1], (k * y[0] ** ku - y[1]) / c2, -(y[2] + lam * y[0] ** expo) / c2])

    ys = _rk4(rhs, np.array([u0, scaling.u_prime[0], beta1_delta]), scaling.times[0], scaling.dt,
              scaling.times.size - 1)
    beta = ys[:, 2]
    rate = -(beta + lam * scaling.u ** expo) / c2
    return scaling.with_beta1(beta, rate)


def alpha2_closed_form(c, C1: float, C2: float, t) -> np.ndarray:
    """alpha2 = v'/v with v = C1 + C2 exp(-t/c^2), the solution of c^2(a' + a^2) + a = 0."""
    c = parse_speed(c)
    t = np.asarray(t, dtype=float)
    if c is C_INF:
        raise UnsupportedError("alpha2 is defined for finite c")
    if c == 0:
        return np.zeros_like(t)
    e = C2 * np.exp(-t / (c * c))
    v = C1 + e
    if np.any(v == 0) or (np.ndim(v) and v.size > 1 and np.any(np.sign(v[1:]) != np.sign(v[:-1]))):
        raise DomainError("v = C1 + C2 exp(-t/c^2) vanishes on the interval")
    return -e / (c * c) / v


# ---------------------------------------------------------------- sampled states


def reference_scale(profile: BarenblattProfile, t: float, scaling: Optional[ScalingSolution] = None,
                    c=None) -> Tuple[float, float]:
    """(u, u') at time t.  Without a scaling path the c = 0 and c = inf closed forms are used."""
    if scaling is not None:
        u, up, _ = scaling.evaluate(t)
        return float(u), float(up)
    c = parse_speed(c)
    k = profile.k
    if c is C_INF:
        return float(t), 1.0
    if c == 0:
        return float(t) ** k, k * float(t) ** (k - 1)
    raise ConfigurationError("a scaling path is required for finite c > 0")


def reference_state(grid: Grid, t: float, profile: BarenblattProfile,
                    scaling: Optional[ScalingSolution] = None, c=None,
                    alpha2_constants: Optional[Tuple[float, float]] = None) -> Tuple[DensityField, PotentialField]:
    """Sample rho = u^{-m} rho0(x/u) and the matching potential at time t.

    The potential is (alpha1/2)|x|^2 + beta1 on the support and
    (alpha2/2)|x|^2 + exp(-c^2 t) outside; the geodesic regime uses
    |x|^2/(2t) everywhere.
    """
    if grid.is_periodic:
        raise UnsupportedError("reference solutions live on radial grids")
    if abs(grid.ambient_dim - profile.m) > 0:
        raise ConfigurationError("reference solutions need a radial grid with ambient_dim = m")
    if scaling is not None:
        c = scaling.c
    c = parse_speed(c if c is not None else 0.0)
    u, up = reference_scale(profile, t, scaling, c)
    radius = u * profile.support_radius
    if radius >= grid.length:
        raise DomainError(f"support radius {radius:.6g} exceeds the grid length {grid.length}")
    r = grid.nodes
    rho = profile.density(r / u) / u ** profile.m
    inside = r < radius
    alpha1 = up / u
    expo = -(profile.gamma - 1.0) * profile.m
    if c is C_INF:
        phi = 0.5 * alpha1 * r * r
        if scaling is not None and scaling.beta1 is not None:
            phi = phi + float(scaling.beta1_at(t))
    else:
        if c == 0:
            beta1 = -profile.lam * u ** expo
        elif scaling is not None and scaling.beta1 is not None:
            beta1 = float(scaling.beta1_at(t))
        else:
            raise ConfigurationError("finite c needs a scaling path with beta1 attached")
        C1, C2 = alpha2_constants or (scaling.alpha2_constants if scaling is not None else (1.0, 0.0))
        a2 = float(alpha2_closed_form(c, C1, C2, t))
        outside = 0.5 * a2 * r * r + math.exp(-(c * c) * t)
        phi = np.where(inside, 0.5 * alpha1 * r * r + beta1, outside)
    return (DensityField(grid, rho, support_radius=radius),
            PotentialField(grid, phi, support_radius=radius))


def reference_entropy_closed_form(profile: BarenblattProfile, u_value: float) -> float:
    """Ent_gamma(rho_{c,m}) = A u^{2-1/k}."""
    if not u_value > 0:
        raise DomainError("u must be positive")
    return profile.A * u_value ** (2.0 - 1.0 / profile.k)


def reference_entropy_rate(profile: BarenblattProfile, u_value: float, u_prime: float) -> float:
    k = profile.k
    return profile.A * (2.0 - 1.0 / k) * u_value ** (1.0 - 1.0 / k) * u_prime


def reference_fisher(profile: BarenblattProfile, u_value: float) -> float:
    """|grad Ent_gamma|^2 = (1-2k) A u^{2(1-1/k)} along the reference family."""
    k = profile.k
    return (1.0 - 2.0 * k) * profile.A * u_value ** (2.0 * (1.0 - 1.0 / k))


def reference_kinetic(profile: BarenblattProfile, u_value: float, u_prime: float) -> float:
    """int |grad phi|^2 rho = alpha1^2 int |x|^2 rho = 2 M2 u'^2."""
    return 2.0 * profile.M2 * u_prime ** 2
