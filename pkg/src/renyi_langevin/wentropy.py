"""W-entropy coefficients and the two sides of the W-entropy(-information) formulae.

Along a flow sampled at uniform diagnostic times the left-hand sides are
built from finite differences in time of quadrature values, while the
right-hand side is a single spatial quadrature (the Bochner term).  The two
routes share no code beyond the basic functionals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import (
    ConfigurationError,
    DegeneracyError,
    SparseTrajectoryError,
    UnsupportedError,
)
from .fields import C_INF, DensityField, ModelParams, Regime, ScalarField, WeightedMeasure
from .functionals import (
    bochner_rhs,
    entropy_time_derivative,
    fisher_information,
    renyi_entropy,
)
from .reference import (
    BarenblattProfile,
    ScalingSolution,
    _rk4,
    _time_grid,
    reference_entropy_closed_form,
    reference_entropy_rate,
    reference_fisher,
)

MIN_STENCIL = 5


# ---------------------------------------------------------------- finite differences


def fd_weights(offsets: Sequence[int], deriv: int) -> np.ndarray:
    """Weights w with sum(w_j f(x + s_j h)) = h^deriv f^{(deriv)}(x) + O(h^len)."""
    s = np.asarray(offsets, dtype=float)
    n = s.size
    vander = np.vander(s, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(vander, rhs)


def time_derivative(values, times, deriv: int = 1) -> np.ndarray:
    """Fourth order (five point) time derivative on a uniform time grid.

    Interior samples use the centred stencil; the two samples at each end
    use shifted one-sided five point stencils.
    """
    v = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    if v.size < MIN_STENCIL:
        raise SparseTrajectoryError(f"need at least {MIN_STENCIL} samples, got {v.size}")
    dt = np.diff(t)
    if np.ptp(dt) > 1e-9 * abs(dt[0]):
        raise SparseTrajectoryError("diagnostic times must be uniformly spaced")
    h = float(dt.mean())
    out = np.empty_like(v)
    n = v.size
    for i in range(n):
        start = min(max(i - 2, 0), n - MIN_STENCIL)
        offs = np.arange(start, start + MIN_STENCIL) - i
        out[i] = np.dot(fd_weights(offs, deriv), v[start:start + MIN_STENCIL]) / h ** deriv
    return out


def interior_mask(n: int, width: int = 2) -> np.ndarray:
    """True where the centred stencil was used."""
    mask = np.zeros(n, dtype=bool)
    mask[width:n - width] = True
    return mask


# ---------------------------------------------------------------- coefficients


@dataclass(frozen=True)
class WEntropyCoefficients:
    """a(t), b(t) and alpha(t) = u'/u on a time grid."""

    regime: Regime
    k: float
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray
    alpha: np.ndarray
    c: object = None
    scaling: Optional[ScalingSolution] = field(default=None, repr=False)

    def _drift(self, alpha):
        """2 alpha (1/k - 1) + 1/c^2 for finite c."""
        return 2.0 * alpha * (1.0 / self.k - 1.0) + 1.0 / (self.c * self.c)

    def at(self, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(a, b, alpha) at arbitrary times inside the grid."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.times[0], self.times[-1]
        if np.any(t < lo - 1e-9 * (hi - lo)) or np.any(t > hi + 1e-9 * (hi - lo)):
            raise ConfigurationError(f"time outside the coefficient range [{lo}, {hi}]")
        k = self.k
        if self.regime is Regime.GRADIENT_FLOW:
            return (2 - 2 * k) * t ** (1 - 2 * k), t ** (2 - 2 * k), k / t
        if self.regime is Regime.GEODESIC:
            return (1 / k - 1) * t ** (1 / k - 2), t ** (1 / k - 1), 1.0 / t
        u, up, upp = self.scaling.evaluate(t)
        alpha = up / u
        b = CubicHermiteSpline(self.times, self.b, self.b_prime)(t)
        bp = CubicHermiteSpline(self.times, self.b_prime, _b_second(self, self.b, self.b_prime))(t)
        return self._drift(alpha) * b - bp, b, alpha

    def alpha_at(self, t):
        return self.at(t)[2]

    def u_at(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """Scale factor u and u' of the reference family matched to these coefficients."""
        t = np.asarray(t, dtype=float)
        if self.regime is Regime.GRADIENT_FLOW:
            return t ** self.k, self.k * t ** (self.k - 1)
        if self.regime is Regime.GEODESIC:
            return t, np.ones_like(t)
        u, up, _ = self.scaling.evaluate(t)
        return u, up


def _b_second(co: WEntropyCoefficients, b, bp):
    u, up, upp = co.scaling.u, co.scaling.u_prime, co.scaling._second(co.scaling.u, co.scaling.u_prime)
    alpha = up / u
    k = co.k
    return co._drift(alpha) * bp + (1 / k - 1) * (2 * upp / u - up * up / (k * u * u)) * b


def coefficients_build(params: ModelParams, scaling: Optional[ScalingSolution] = None,
                       b_delta: float = 1.0, b_prime_delta: float = 0.0,
                       interval: Optional[Sequence[float]] = None, dt: float = 1e-3) -> WEntropyCoefficients:
    """Coefficients of the W-entropy for the regime fixed by ``params.c``.

    c = 0 and c = inf use closed forms on ``interval`` (or on the scaling
    grid).  Finite c integrates the linear second order ODE for b jointly
    with the scaling ODE and recovers a = [2 alpha (1/k-1) + 1/c^2] b - b'.
    """
    k = params.k
    regime = params.regime
    if regime is not Regime.LANGEVIN:
        if scaling is not None:
            times = scaling.times
        elif interval is not None:
            times, _ = _time_grid(float(interval[0]), float(interval[1]), dt)
        else:
            raise ConfigurationError("need an interval or a scaling path")
        if regime is Regime.GRADIENT_FLOW:
            a = (2 - 2 * k) * times ** (1 - 2 * k)
            b = times ** (2 - 2 * k)
            bp = (2 - 2 * k) * times ** (1 - 2 * k)
            alpha = k / times
        else:
            a = (1 / k - 1) * times ** (1 / k - 2)
            b = times ** (1 / k - 1)
            bp = (1 / k - 1) * times ** (1 / k - 2)
            alpha = 1.0 / times
        return WEntropyCoefficients(regime, k, times, a, b, bp, alpha, params.c, scaling)

    if scaling is None:
        raise ConfigurationError("finite c needs the scaling path u(t)")
    if abs(scaling.k - k) > 1e-14 or scaling.c != params.c:
        raise ConfigurationError("scaling path does not match the model parameters")
    if not b_delta > 0:
        raise ConfigurationError("b(delta) must be positive")
    c2 = params.c2
    ku = 1.0 - 1.0 / k

    def rhs(t, y):
        u, up, b, bp = y
        upp = (k * u ** ku - up) / c2
        alpha = up / u
        drift = 2 * alpha * (1 / k - 1) + 1 / c2
        bpp = drift * bp + (1 / k - 1) * (2 * upp / u - up * up / (k * u * u)) * b
        return np.array([up, upp, bp, bpp])

    def guard(t, y):
        if y[2] <= 0:
            raise DegeneracyError(f"b(t) reached zero near t = {t}", time=t)

    ys = _rk4(rhs, np.array([scaling.u[0], scaling.u_prime[0], b_delta, b_prime_delta]),
              scaling.times[0], scaling.dt, scaling.times.size - 1, guard)
    b, bp = ys[:, 2], ys[:, 3]
    alpha = scaling.u_prime / scaling.u
    a = (2 * alpha * (1 / k - 1) + 1 / c2) * b - bp
    return WEntropyCoefficients(regime, k, scaling.times, a, b, bp, alpha, params.c, scaling)


def coefficient_residuals(co: WEntropyCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """Residuals of the two defining relations between a, b and alpha.

    Finite c:  (a + b')/b - 2 alpha (1/k-1) - 1/c^2  and  a'/b - (1/k-2)(1/k-1) alpha^2.
    c = inf drops the 1/c^2 term.  c = 0 uses the relations obeyed by the
    closed forms (both right-hand sides doubled).
    """
    k = co.k
    t = co.times
    da = np.gradient(co.a, t, edge_order=2)
    first = (co.a + co.b_prime) / co.b - 2 * co.alpha * (1 / k - 1)
    second = da / co.b - (1 / k - 2) * (1 / k - 1) * co.alpha ** 2
    if co.regime is Regime.LANGEVIN:
        first = first - 1.0 / (co.c * co.c)
    elif co.regime is Regime.GRADIENT_FLOW:
        first = first - 2 * co.alpha * (1 / k - 1)
        second = second - (1 / k - 2) * (1 / k - 1) * co.alpha ** 2
    return first, second


# ---------------------------------------------------------------- relative quantities


def relative_quantities(rho: DensityField, t: float, profile: BarenblattProfile, coeffs: WEntropyCoefficients,
                        mu: WeightedMeasure, reference: Optional[DensityField] = None) -> Tuple[float, float]:
    """(H_cm, I_cm): entropy and Fisher information relative to the reference family at time t.

    The reference values come from their closed forms unless a sampled
    ``reference`` density is given, in which case it must live on the same grid.
    """
    gamma = profile.gamma
    if reference is not None:
        if reference.grid != rho.grid:
            raise UnsupportedError("flow and reference densities live on different geometries")
        ent_ref = renyi_entropy(reference, gamma, mu)
        fis_ref = fisher_information(reference, gamma, mu)
    else:
        u, _ = coeffs.u_at(t)
        ent_ref = reference_entropy_closed_form(profile, float(u))
        fis_ref = reference_fisher(profile, float(u))
    return (renyi_entropy(rho, gamma, mu) - ent_ref,
            fisher_information(rho, gamma, mu, check=False) - fis_ref)


def w_entropy(H: float, dH: float, a: float, b: float) -> float:
    """W = a H + b dH/dt."""
    return a * H + b * dH


@dataclass
class WSeries:
    """All W-entropy quantities along a sampled flow."""

    times: np.ndarray
    ent: np.ndarray
    dent: np.ndarray
    fisher: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    I: np.ndarray
    a: np.ndarray
    b: np.ndarray
    alpha: np.ndarray
    W: np.ndarray
    dW: np.ndarray
    bochner: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.lhs - self.rhs

    @property
    def interior(self) -> np.ndarray:
        return interior_mask(self.times.size)


def w_series(times, rhos: Sequence[DensityField], phis: Sequence[ScalarField], params: ModelParams,
             mu: WeightedMeasure, coeffs: WEntropyCoefficients, profile: BarenblattProfile) -> WSeries:
    """Evaluate H, W and both sides of the W-entropy formula along a sampled flow.

    The left side is built from time differences of W:
    (1/b) dW/dt + I_cm / c^2 for finite c, plain dW/dt for c = 0 and c = inf.
    The right side is the spatial Bochner integral, weighted by 1 (finite c),
    2b (c = 0) or b (c = inf).
    """
    times = np.asarray(times, dtype=float)
    if len(rhos) != times.size or len(phis) != times.size:
        raise ConfigurationError("times, densities and potentials must have equal length")
    if times.size < MIN_STENCIL:
        raise SparseTrajectoryError(f"need at least {MIN_STENCIL} diagnostic samples")
    gamma = params.gamma
    a, b, alpha = (np.asarray(v, dtype=float) for v in coeffs.at(times))
    u, up = coeffs.u_at(times)
    ent = np.array([renyi_entropy(r, gamma, mu) for r in rhos])
    dent = np.array([entropy_time_derivative(r, p, gamma, mu) for r, p in zip(rhos, phis)])
    fis = np.array([fisher_information(r, gamma, mu, check=False) for r in rhos])
    ent_ref = np.array([reference_entropy_closed_form(profile, float(x)) for x in u])
    dent_ref = np.array([reference_entropy_rate(profile, float(x), float(y)) for x, y in zip(u, up)])
    fis_ref = np.array([reference_fisher(profile, float(x)) for x in u])
    H = ent - ent_ref
    dH = dent - dent_ref
    I = fis - fis_ref
    W = a * H + b * dH
    dW = time_derivative(W, times)
    boch = np.array([bochner_rhs(r, p, float(al), params, mu) for r, p, al in zip(rhos, phis, alpha)])
    if params.regime is Regime.LANGEVIN:
        lhs = dW / b + I / params.c2
        rhs = boch
    elif params.regime is Regime.GRADIENT_FLOW:
        lhs = dW
        rhs = 2.0 * b * boch
    else:
        lhs = dW
        rhs = b * boch
    return WSeries(times, ent, dent, fis, H, dH, I, a, b, alpha, W, dW, boch, lhs, rhs)


def w_formula_sides(series: WSeries, t: float) -> Tuple[float, float]:
    """(lhs, rhs) at a diagnostic time; interior times use the centred stencil."""
    idx = int(np.argmin(np.abs(series.times - t)))
    if abs(series.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
        raise SparseTrajectoryError(f"t = {t} is not a diagnostic sample time")
    return float(series.lhs[idx]), float(series.rhs[idx])


# ---------------------------------------------------------------- variational identity


def verify_variational_identity(times, rhos: Sequence[DensityField], phis: Sequence[ScalarField],
                                alpha, params: ModelParams, mu: WeightedMeasure) -> Tuple[np.ndarray, np.ndarray]:
    """Both sides of the entropy second-variation identity along a sampled flow.

    ``alpha`` is a scalar, an array over ``times`` or a callable of t.  With
    D = 1/k - 1 and E = (1/k - 2)(1/k - 1):

      finite c:  Ent'' + (2 alpha D + 1/c^2) Ent' + I/c^2 + E alpha^2 Ent  =  Bochner
      c = inf:   Ent'' + 2 alpha D Ent' + E alpha^2 Ent                    =  Bochner
      c = 0:     Ent'' + 4 alpha D Ent' + 2 E alpha^2 Ent                  =  2 Bochner

    Ent'' is a second finite difference of the sampled entropy, Ent' is the
    quadrature rate and the right side is a spatial quadrature.
    """
    times = np.asarray(times, dtype=float)
    if callable(alpha):
        al = np.array([float(alpha(t)) for t in times])
    else:
        al = np.broadcast_to(np.asarray(alpha, dtype=float), times.shape).astype(float)
    gamma = params.gamma
    k = params.k
    D = 1 / k - 1
    E = (1 / k - 2) * (1 / k - 1)
    ent = np.array([renyi_entropy(r, gamma, mu) for r in rhos])
    dent = np.array([entropy_time_derivative(r, p, gamma, mu) for r, p in zip(rhos, phis)])
    d2ent = time_derivative(ent, times, deriv=2)
    boch = np.array([bochner_rhs(r, p, float(x), params, mu) for r, p, x in zip(rhos, phis, al)])
    if params.regime is Regime.LANGEVIN:
        fis = np.array([fisher_information(r, gamma, mu, check=False) for r in rhos])
        inv = 1.0 / params.c2
        lhs = d2ent + (2 * al * D + inv) * dent + inv * fis + E * al ** 2 * ent
        rhs = boch
    elif params.regime is Regime.GEODESIC:
        lhs = d2ent + 2 * al * D * dent + E * al ** 2 * ent
        rhs = boch
    else:
        lhs = d2ent + 4 * al * D * dent + 2 * E * al ** 2 * ent
        rhs = 2.0 * boch
    return lhs, rhs
