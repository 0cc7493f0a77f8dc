"""Scalar functionals of a state (rho, phi) on a weighted 1-D domain."""
from __future__ import annotations

import enum
import math
from dataclasses import astuple, dataclass, fields
from typing import Optional, Tuple

import numpy as np

from .errors import NumericalConsistencyError, UnsupportedError
from .fields import (
    DensityField,
    ModelParams,
    Regime,
    ScalarField,
    WeightedMeasure,
    bakry_emery_curvature,
    gradient,
    integrate,
    support_count,
    witten_laplacian,
)

VACUUM_RELATIVE_FLOOR = 1e-12


class PotentialKind(str, enum.Enum):
    RENYI = "renyi"
    BOLTZMANN_SHANNON = "boltzmann-shannon"


@dataclass(frozen=True)
class PotentialSpec:
    """Internal energy density V with its pressure P = rho V' - V and P2 = rho P' - P."""

    kind: PotentialKind
    gamma: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        if self.kind is PotentialKind.RENYI and not self.gamma > 1:
            raise ValueError("renyi potential needs gamma > 1")
        self._self_check()

    @classmethod
    def renyi(cls, gamma: float) -> "PotentialSpec":
        return cls(PotentialKind.RENYI, gamma)

    @classmethod
    def boltzmann_shannon(cls) -> "PotentialSpec":
        return cls(PotentialKind.BOLTZMANN_SHANNON, 1.0)

    def V(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind is PotentialKind.RENYI:
            return rho ** self.gamma / (self.gamma - 1.0)
        return np.where(rho > 0, rho * np.log(np.where(rho > 0, rho, 1.0)), 0.0)

    def dV(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind is PotentialKind.RENYI:
            return self.gamma * rho ** (self.gamma - 1.0) / (self.gamma - 1.0)
        return np.log(rho) + 1.0

    def P(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind is PotentialKind.RENYI:
            return rho ** self.gamma
        return rho

    def P2(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind is PotentialKind.RENYI:
            return (self.gamma - 1.0) * rho ** self.gamma
        return np.zeros_like(rho)

    def _self_check(self):
        # compare the closed forms of P and P2 with their definitions, using
        # a centred difference for P'
        s = np.linspace(0.2, 3.0, 15)
        ds = 1e-5 * s
        p_def = s * self.dV(s) - self.V(s)
        dP = (self.P(s + ds) - self.P(s - ds)) / (2 * ds)
        p2_def = s * dP - self.P(s)
        scale = 1.0 + np.abs(self.P(s))
        if np.max(np.abs(p_def - self.P(s)) / scale) > 1e-10:
            raise NumericalConsistencyError("pressure P does not match rho V' - V")
        if np.max(np.abs(p2_def - self.P2(s)) / scale) > 1e-6:
            raise NumericalConsistencyError("P2 does not match rho P' - P")


@dataclass
class DiagnosticsRecord:
    """One time slice of all monitored functionals; NaN marks an undefined slot."""

    t: float
    mass: float
    ent_gamma: float
    dent_dt: float
    fisher: float
    grad_ent_norm_sq: float
    second_moment: float
    kinetic: float
    hamiltonian: float
    lagrangian: float
    bochner_rhs: float
    H_cm: float = math.nan
    W_cm: float = math.nan
    I_cm: float = math.nan
    lhs_w_formula: float = math.nan
    residual: float = math.nan

    @classmethod
    def columns(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(float(v) for v in astuple(self))

    def check(self, mass_tol: float = 1e-6, allow_nan: bool = True):
        for name, v in zip(self.columns(), self.as_tuple()):
            if math.isinf(v) or (math.isnan(v) and not allow_nan):
                raise ValueError(f"diagnostic {name} is not finite: {v}")
        if abs(self.mass - 1.0) > mass_tol:
            raise ValueError(f"mass {self.mass!r} drifted beyond {mass_tol}")


# ---------------------------------------------------------------- helpers


def _support(rho: ScalarField) -> Optional[float]:
    return getattr(rho, "support_radius", None)


def _restricted(values: np.ndarray, rho: ScalarField) -> np.ndarray:
    """Zero a derived integrand outside the analytic support of rho."""
    n = support_count(rho.grid, _support(rho))
    if n is None:
        return values
    out = values.copy()
    out[n:] = 0.0
    return out


def _integral(values: np.ndarray, rho: ScalarField, mu: WeightedMeasure) -> float:
    return integrate(ScalarField(rho.grid, _restricted(values, rho)), mu, _support(rho))


def _grad(values: np.ndarray, rho: ScalarField) -> np.ndarray:
    return gradient(ScalarField(rho.grid, values), _support(rho)).values


def _hessian_parts(phi: ScalarField, rho: ScalarField, mu: WeightedMeasure):
    """phi', phi'', phi'/r (zero on periodic grids) and L phi."""
    grid = rho.grid
    support = _support(rho)
    dphi = _grad(phi.values, rho)
    d2phi = _grad(dphi, rho)
    lphi = witten_laplacian(ScalarField(grid, phi.values), mu, support).values
    if grid.is_periodic:
        over_r = np.zeros(grid.points)
    else:
        over_r = dphi / grid.nodes
    return dphi, d2phi, over_r, lphi


def _check_gamma(gamma):
    if not gamma > 1:
        raise ValueError("gamma must exceed 1 (fast diffusion is out of scope)")


def _pressure(rho: np.ndarray, gamma: float) -> np.ndarray:
    """gamma rho^{gamma-1}/(gamma-1), the first variation of Ent_gamma."""
    return gamma * rho ** (gamma - 1.0) / (gamma - 1.0)


# ---------------------------------------------------------------- functionals


def renyi_entropy(rho: DensityField, gamma: float, mu: WeightedMeasure, normalized: bool = False) -> float:
    """Ent_gamma = int rho^gamma / (gamma - 1); ``normalized`` subtracts 1/(gamma-1)."""
    _check_gamma(gamma)
    val = _integral(rho.values ** gamma, rho, mu) / (gamma - 1.0)
    if normalized:
        val -= 1.0 / (gamma - 1.0)
    return val


def entropy_time_derivative_forms(rho: DensityField, phi: ScalarField, gamma: float,
                                  mu: WeightedMeasure) -> Tuple[float, float]:
    """(int <grad rho^gamma, grad phi>, -int (L phi) rho^gamma), equal after integration by parts."""
    _check_gamma(gamma)
    rg = rho.values ** gamma
    grad_form = _integral(_grad(rg, rho) * _grad(phi.values, rho), rho, mu)
    lphi = witten_laplacian(ScalarField(rho.grid, phi.values), mu, _support(rho)).values
    lap_form = -_integral(lphi * rg, rho, mu)
    return grad_form, lap_form


def entropy_time_derivative(rho: DensityField, phi: ScalarField, gamma: float, mu: WeightedMeasure,
                            rtol: float = 1e-4, check: bool = True) -> float:
    """d Ent_gamma / dt along the continuity equation driven by grad phi.

    Returns the Laplacian form.  Raises NumericalConsistencyError when the
    gradient form disagrees by more than 10 * rtol (relative to the size of
    either integrand).
    """
    g_form, l_form = entropy_time_derivative_forms(rho, phi, gamma, mu)
    if check:
        scale = max(abs(g_form), abs(l_form), 1e-300)
        if abs(g_form - l_form) > 10 * rtol * scale and abs(g_form - l_form) > 1e-13:
            raise NumericalConsistencyError(
                f"entropy derivative forms disagree: {g_form!r} vs {l_form!r}")
    return l_form


def fisher_information_forms(rho: DensityField, gamma: float, mu: WeightedMeasure,
                             floor: Optional[float] = None) -> Tuple[float, float]:
    """(int |grad p|^2 rho, int |grad rho^gamma|^2 / rho) with p = gamma rho^{gamma-1}/(gamma-1).

    The second form is evaluated on {rho > floor}, floor = 1e-12 max(rho) by default.
    """
    _check_gamma(gamma)
    r = rho.values
    p_form = _integral(_grad(_pressure(r, gamma), rho) ** 2 * r, rho, mu)
    eps = VACUUM_RELATIVE_FLOOR * float(np.max(r)) if floor is None else floor
    grad_rg = _grad(r ** gamma, rho)
    safe = np.where(r > eps, r, 1.0)
    direct = np.where(r > eps, grad_rg ** 2 / safe, 0.0)
    return p_form, _integral(direct, rho, mu)


def fisher_information(rho: DensityField, gamma: float, mu: WeightedMeasure,
                       rtol: float = 1e-3, check: bool = True) -> float:
    """I_gamma(rho) = |grad Ent_gamma|^2 in the Otto metric (pressure form)."""
    p_form, direct = fisher_information_forms(rho, gamma, mu)
    if check:
        scale = max(abs(p_form), abs(direct), 1e-300)
        if abs(p_form - direct) > 10 * rtol * scale and abs(p_form - direct) > 1e-13:
            raise NumericalConsistencyError(f"Fisher forms disagree: {p_form!r} vs {direct!r}")
    return p_form


def second_moment(rho: DensityField, mu: WeightedMeasure) -> float:
    """int |x|^2/2 rho d mu on a radial (or symmetric line) grid."""
    if rho.grid.is_periodic:
        raise UnsupportedError("second moment is undefined on a torus")
    r = rho.grid.nodes
    return _integral(0.5 * r * r * rho.values, rho, mu)


def relative_entropy(rho: ScalarField, rho_bar: ScalarField, gamma: float, mu: WeightedMeasure,
                     tol: float = 1e-12) -> float:
    """int h(rho) - h(rho_bar) - h'(rho_bar)(rho - rho_bar), h(s) = s^gamma/(gamma-1)."""
    _check_gamma(gamma)
    a, b = rho.values, rho_bar.values
    dens = (a ** gamma - b ** gamma - gamma * b ** (gamma - 1.0) * (a - b)) / (gamma - 1.0)
    sa, sb = _support(rho), _support(rho_bar)
    support = None if sa is None or sb is None else max(sa, sb)
    val = integrate(ScalarField(rho.grid, dens), mu, support)
    mag = integrate(ScalarField(rho.grid, (a ** gamma + b ** gamma) / (gamma - 1.0)), mu, support)
    if val < -tol * max(mag, 1.0):
        raise NumericalConsistencyError(f"relative entropy is negative: {val!r}")
    return max(val, 0.0)


def kinetic_energy(rho: DensityField, phi: ScalarField, mu: WeightedMeasure) -> float:
    """K = int |grad phi|^2 rho d mu (twice the usual kinetic energy)."""
    return _integral(_grad(phi.values, rho) ** 2 * rho.values, rho, mu)


def hamiltonian_lagrangian(rho: DensityField, phi: ScalarField, params: ModelParams,
                           mu: WeightedMeasure) -> Tuple[float, float]:
    """(H, L) = c^2 K / 2 +/- V with V = potential_sign * Ent_gamma."""
    if params.regime is not Regime.LANGEVIN:
        raise UnsupportedError("H and L are defined for finite positive c only")
    kin = 0.5 * params.c2 * kinetic_energy(rho, phi, mu)
    pot = params.potential_sign * renyi_entropy(rho, params.gamma, mu)
    return kin + pot, kin - pot


def hessian_quadratic_form(rho: DensityField, phi: ScalarField, pot: PotentialSpec,
                           mu: WeightedMeasure) -> float:
    """int P2(rho)(L phi)^2 + P(rho)(|Hess phi|^2 + f'' phi'^2)."""
    dphi, d2phi, over_r, lphi = _hessian_parts(phi, rho, mu)
    d = rho.grid.ambient_dim
    hs = d2phi ** 2 + (d - 1) * over_r ** 2
    r = rho.values
    dens = pot.P2(r) * lphi ** 2 + pot.P(r) * (hs + mu.f_second * dphi ** 2)
    return _integral(dens, rho, mu)


def bochner_integrand(rho: DensityField, phi: ScalarField, alpha: float, params: ModelParams,
                      mu: WeightedMeasure) -> np.ndarray:
    """Pointwise integrand of the Bochner type right-hand side (before multiplying by mu)."""
    grid = rho.grid
    d = grid.ambient_dim
    if params.n != d:
        raise ValueError(f"params.n = {params.n} does not match the grid dimension {d}")
    ric = bakry_emery_curvature(mu, params).values
    dphi, d2phi, over_r, lphi = _hessian_parts(phi, rho, mu)
    m, n, gam = params.m, params.n, params.gamma
    br = (d2phi - alpha) ** 2 + (d - 1) * (over_r - alpha) ** 2
    br = br + ric * dphi ** 2 + (gam - 1.0) * (lphi - m * alpha) ** 2
    if m > n and not math.isinf(m):
        br = br + (m - n) * (dphi * mu.f_prime / (m - n) + alpha) ** 2
    return _restricted(rho.values ** gam * br, rho)


def bochner_rhs(rho: DensityField, phi: ScalarField, alpha: float, params: ModelParams,
                mu: WeightedMeasure, assert_nonnegative: bool = False) -> float:
    """int rho^gamma [ |Hess phi - alpha|^2 + Ric_{m,n}(phi',phi') + (gamma-1)(L phi - m alpha)^2
    + (m-n)(phi' f'/(m-n) + alpha)^2 ] d mu.

    With ``assert_nonnegative`` the result is checked whenever the sampled
    curvature is nonnegative.
    """
    val = _integral(bochner_integrand(rho, phi, alpha, params, mu), rho, mu)
    if assert_nonnegative:
        ric = bakry_emery_curvature(mu, params).values
        if np.all(ric >= 0) and val < -1e-12 * (1 + abs(val)):
            raise NumericalConsistencyError(f"Bochner term negative under Ric >= 0: {val!r}")
    return val
