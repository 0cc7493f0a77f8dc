"""Grids, weighted measures and discrete differential operators on 1-D domains.

Two geometries are supported:

* ``periodic-1d``: a flat circle of given period, nodes at ``x_i = i h``.
  Derivatives are computed spectrally.
* ``radial``: the radial coordinate of a rotationally symmetric function on
  R^d, with nodes at cell centres ``r_i = (i + 1/2) h``.  With ``d = 1`` this
  is an even function on the real line.  Derivatives use second order
  finite differences.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    CurvatureConventionError,
    GridMismatchError,
    NonFiniteError,
    UnsupportedError,
)

MIN_POINTS = 16


class GridKind(str, enum.Enum):
    PERIODIC = "periodic-1d"
    RADIAL = "radial"


class _InfiniteSpeed:
    """Marker for the c = infinity regime.  Never used as a number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "C_INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_InfiniteSpeed, ())


C_INF = _InfiniteSpeed()


class Regime(enum.Enum):
    GRADIENT_FLOW = "c=0"
    LANGEVIN = "finite-c"
    GEODESIC = "c=inf"


def parse_speed(c) -> Union[float, _InfiniteSpeed]:
    """Normalise a user supplied c: floats, 'inf' strings and math.inf map to C_INF."""
    if c is C_INF:
        return C_INF
    if isinstance(c, str):
        if c.strip().lower() in ("inf", "infinity", "+inf"):
            return C_INF
        c = float(c)
    c = float(c)
    if math.isnan(c) or c < 0:
        raise ValueError(f"c must lie in [0, inf], got {c}")
    if math.isinf(c):
        return C_INF
    return c


def unit_sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class Grid:
    kind: GridKind
    points: int
    length: float
    ambient_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", GridKind(self.kind))
        if int(self.points) != self.points or self.points < MIN_POINTS:
            raise ValueError(f"grid needs at least {MIN_POINTS} points, got {self.points}")
        object.__setattr__(self, "points", int(self.points))
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError("grid length must be positive and finite")
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be >= 1")
        if self.kind is GridKind.PERIODIC and self.ambient_dim != 1:
            raise ValueError("periodic grids are one dimensional")

    @classmethod
    def periodic(cls, points: int, length: float = 2 * math.pi) -> "Grid":
        return cls(GridKind.PERIODIC, points, length, 1)

    @classmethod
    def radial(cls, points: int, length: float, ambient_dim: int = 1) -> "Grid":
        return cls(GridKind.RADIAL, points, length, ambient_dim)

    @property
    def is_periodic(self) -> bool:
        return self.kind is GridKind.PERIODIC

    @property
    def h(self) -> float:
        return self.length / self.points

    @property
    def nodes(self) -> np.ndarray:
        i = np.arange(self.points, dtype=float)
        if self.is_periodic:
            return i * self.h
        return (i + 0.5) * self.h

    @property
    def wavenumbers(self) -> np.ndarray:
        if not self.is_periodic:
            raise UnsupportedError("wavenumbers exist only on periodic grids")
        return 2 * math.pi * np.fft.fftfreq(self.points, d=self.h)

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return np.asarray(fn(self.nodes), dtype=float) * np.ones(self.points)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.kind, self.points * factor, self.length, self.ambient_dim)


def _as_samples(grid: Grid, values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim == 0:
        arr = np.full(grid.points, float(arr))
    if arr.shape != (grid.points,):
        raise GridMismatchError(f"expected {grid.points} samples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("field contains NaN or Inf")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WeightedMeasure:
    """Reference measure e^{-f} dv, with f and its first two derivatives sampled."""

    grid: Grid
    f_samples: np.ndarray
    f_prime: np.ndarray
    f_second: np.ndarray

    def __post_init__(self):
        for name in ("f_samples", "f_prime", "f_second"):
            object.__setattr__(self, name, _as_samples(self.grid, getattr(self, name)))
        if self.grid.is_periodic:
            f = self.f_samples
            jump = abs(f[0] - f[-1])
            step = np.max(np.abs(np.diff(f))) if f.size > 1 else 0.0
            if jump > 4.0 * step + 1e-12 * (1 + np.max(np.abs(f))):
                raise ValueError("weight exponent f is not periodic on this grid")

    @classmethod
    def zero(cls, grid: Grid) -> "WeightedMeasure":
        z = np.zeros(grid.points)
        return cls(grid, z, z, z)

    @classmethod
    def from_callables(cls, grid: Grid, f, f_prime, f_second) -> "WeightedMeasure":
        return cls(grid, grid.sample(f), grid.sample(f_prime), grid.sample(f_second))

    @classmethod
    def cosine(cls, grid: Grid, amplitude: float) -> "WeightedMeasure":
        """f = a cos(2 pi x / L)."""
        w = 2 * math.pi / grid.length
        a = amplitude
        return cls.from_callables(
            grid,
            lambda x: a * np.cos(w * x),
            lambda x: -a * w * np.sin(w * x),
            lambda x: -a * w * w * np.cos(w * x),
        )

    @classmethod
    def quadratic(cls, grid: Grid, amplitude: float) -> "WeightedMeasure":
        """f = a x^2 / 2, which has constant f'' = a."""
        if grid.is_periodic:
            raise UnsupportedError("a quadratic weight is not periodic")
        a = amplitude
        return cls.from_callables(grid, lambda x: 0.5 * a * x * x, lambda x: a * x, lambda x: a + 0 * x)

    @property
    def is_flat(self) -> bool:
        return not (np.any(self.f_prime) or np.any(self.f_second) or np.any(self.f_samples))

    @property
    def density(self) -> np.ndarray:
        """e^{-f} at the nodes."""
        return np.exp(-self.f_samples)


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_samples(self.grid, self.values))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def __len__(self):
        return self.grid.points


@dataclass(frozen=True)
class DensityField(ScalarField):
    """Nonnegative density.

    ``support_radius`` marks an analytic free boundary on radial grids; it is
    used by quadrature and by one-sided differencing at the support edge.
    ``mass_tol`` (when given) enforces unit mass against ``measure``.
    """

    support_radius: Optional[float] = None
    positive_floor: Optional[float] = None
    mass_tol: Optional[float] = None
    measure: Optional[WeightedMeasure] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise ValueError("density has negative samples")
        if self.positive_floor is not None and np.any(self.values < self.positive_floor):
            raise ValueError("density falls below the positive-regime floor")
        if self.support_radius is not None and self.grid.is_periodic:
            raise UnsupportedError("support_radius is only meaningful on radial grids")
        if self.mass_tol is not None:
            mu = self.measure or WeightedMeasure.zero(self.grid)
            mass = integrate(self, mu)
            if abs(mass - 1.0) > self.mass_tol:
                raise ValueError(f"density mass {mass!r} differs from 1 by more than {self.mass_tol}")

    def with_values(self, values) -> "DensityField":
        return DensityField(self.grid, values, support_radius=self.support_radius)


@dataclass(frozen=True)
class PotentialField(ScalarField):
    support_radius: Optional[float] = None

    def with_values(self, values) -> "PotentialField":
        return PotentialField(self.grid, values, support_radius=self.support_radius)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters.  ``potential_sign`` = +1 uses V = Ent, -1 uses V = -Ent."""

    gamma: float
    m: float
    n: int = 1
    c: Union[float, _InfiniteSpeed] = 1.0
    potential_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "c", parse_speed(self.c))
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        if not self.m >= self.n:
            raise ValueError("m must be >= n")
        if self.potential_sign not in (1, -1):
            raise ValueError("potential_sign must be +1 or -1")
        k = self.k
        assert 0 < k <= 0.5
        assert abs(self.m * (self.gamma - 1) + 1 - (1 / k - 1)) <= 1e-12 * (1 / k)

    @property
    def k(self) -> float:
        return 1.0 / (self.m * (self.gamma - 1.0) + 2.0)

    @property
    def regime(self) -> Regime:
        if self.c is C_INF:
            return Regime.GEODESIC
        if self.c == 0:
            return Regime.GRADIENT_FLOW
        return Regime.LANGEVIN

    @property
    def c2(self) -> float:
        if self.c is C_INF:
            raise UnsupportedError("c^2 is undefined in the geodesic regime")
        return self.c * self.c

    def replace(self, **kw) -> "ModelParams":
        d = dict(gamma=self.gamma, m=self.m, n=self.n, c=self.c, potential_sign=self.potential_sign)
        d.update(kw)
        return ModelParams(**d)


# ---------------------------------------------------------------- operators


def _check_same_grid(*grids: Grid):
    g0 = grids[0]
    for g in grids[1:]:
        if g != g0:
            raise GridMismatchError(f"grid mismatch: {g0} vs {g}")


def spectral_derivative(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Fourier derivative with the Nyquist mode dropped for odd orders."""
    k = grid.wavenumbers
    if order % 2 == 1 and grid.points % 2 == 0:
        k = k.copy()
        k[grid.points // 2] = 0.0
    return np.real(np.fft.ifft((1j * k) ** order * np.fft.fft(values)))


def fd_derivative(values: np.ndarray, h: float, support_points: Optional[int] = None) -> np.ndarray:
    """Second order central differences with one-sided second order closures.

    When ``support_points`` is given only the first that many samples are
    differenced; the rest of the output is zero.
    """
    n = values.size if support_points is None else support_points
    out = np.zeros_like(values, dtype=float)
    if n >= 3:
        out[:n] = np.gradient(values[:n], h, edge_order=2)
    elif n == 2:
        out[:2] = (values[1] - values[0]) / h
    return out


def support_count(grid: Grid, support_radius: Optional[float]) -> Optional[int]:
    """Number of nodes strictly inside the support, or None for full support."""
    if support_radius is None or grid.is_periodic:
        return None
    n = int(np.count_nonzero(grid.nodes < support_radius))
    return None if n >= grid.points else n


def _derivative(values, grid, support_radius=None):
    if grid.is_periodic:
        return spectral_derivative(values, grid)
    return fd_derivative(values, grid.h, support_count(grid, support_radius))


def gradient(fld: ScalarField, support_radius: Optional[float] = None) -> ScalarField:
    """Discrete d/dx (periodic) or d/dr (radial).

    A ``support_radius`` (taken from the field when it carries one) restricts
    the stencil to nodes inside the support so that the kink at a free
    boundary does not pollute the last interior derivatives.
    """
    if support_radius is None:
        support_radius = getattr(fld, "support_radius", None)
    return ScalarField(fld.grid, _derivative(fld.values, fld.grid, support_radius))


def weighted_divergence_adjoint(X: ScalarField, mu: WeightedMeasure,
                                support_radius: Optional[float] = None) -> ScalarField:
    """Adjoint of the gradient in L^2(mu):  -e^{f} (e^{-f} X)' (times r^{d-1} radially)."""
    _check_same_grid(X.grid, mu.grid)
    g = X.grid
    w = mu.density
    if not g.is_periodic and g.ambient_dim > 1:
        w = w * g.nodes ** (g.ambient_dim - 1)
    flux = _derivative(w * X.values, g, support_radius)
    return ScalarField(g, -flux / w)


def witten_laplacian(phi: ScalarField, mu: WeightedMeasure,
                     support_radius: Optional[float] = None) -> ScalarField:
    """L phi = phi'' - f' phi' (+ (d-1) phi'/r radially), built as -div_mu grad."""
    _check_same_grid(phi.grid, mu.grid)
    if support_radius is None:
        support_radius = getattr(phi, "support_radius", None)
    grad = gradient(phi, support_radius)
    return ScalarField(phi.grid, -weighted_divergence_adjoint(grad, mu, support_radius).values)


def bakry_emery_curvature(mu: WeightedMeasure, params: ModelParams) -> ScalarField:
    """Ric_{m,n}(L) = f'' - f'^2/(m - n) on a flat 1-D base; m = inf gives f''."""
    fpp = mu.f_second
    fp = mu.f_prime
    if math.isinf(params.m):
        return ScalarField(mu.grid, fpp)
    if params.m == params.n:
        f = mu.f_samples
        if np.ptp(f) > 1e-14 or np.any(fp) or np.any(fpp):
            raise CurvatureConventionError("m = n requires a constant weight exponent f")
        return ScalarField(mu.grid, np.zeros(mu.grid.points))
    return ScalarField(mu.grid, fpp - fp * fp / (params.m - params.n))


# ---------------------------------------------------------------- quadrature


def _cubic_weights(nodes: np.ndarray, a: float, b: float) -> np.ndarray:
    """Weights integrating the cubic through four nodes exactly over [a, b]."""
    x0 = nodes[0]
    s = nodes[1] - nodes[0]
    t = (nodes - x0) / s
    ta, tb = (a - x0) / s, (b - x0) / s
    powers = np.arange(4)
    moments = (tb ** (powers + 1) - ta ** (powers + 1)) / (powers + 1)
    vander = np.vander(t, 4, increasing=True)
    return np.linalg.solve(vander.T, moments) * s


def radial_quadrature_weights(grid: Grid, upper: Optional[float] = None) -> np.ndarray:
    """Fourth order weights for integral over [0, upper] of a smooth function
    sampled at cell centres (the radial Jacobian is not included).

    Interior intervals use the four point rule (-1, 13, 13, -1) h / 24.  The
    end pieces [0, r_0] and [r_J, upper] integrate the cubic through the four
    nearest nodes, so the rule is exact for cubics on the whole range.
    """
    r = grid.nodes
    h = grid.h
    upper = grid.length if upper is None else min(float(upper), grid.length)
    J = int(np.count_nonzero(r < upper))
    if J < 4:
        raise UnsupportedError("support too narrow for quadrature (fewer than 4 nodes)")
    w = np.zeros(grid.points)
    # interval [r_i, r_{i+1}] for i = 1..J-3 with the symmetric four point rule
    inner = np.array([-1.0, 13.0, 13.0, -1.0]) * h / 24.0
    for off, c in enumerate(inner):
        w[off:J - 3 + off] += c
    # left and right edge intervals inside the node range
    w[0:4] += _cubic_weights(r[0:4], r[0], r[1])
    w[J - 4:J] += _cubic_weights(r[J - 4:J], r[J - 2], r[J - 1])
    # end pieces outside the node range
    w[0:4] += _cubic_weights(r[0:4], 0.0, r[0])
    w[J - 4:J] += _cubic_weights(r[J - 4:J], r[J - 1], upper)
    return w


def measure_weights(grid: Grid, mu: WeightedMeasure, support_radius: Optional[float] = None) -> np.ndarray:
    """Vector w such that sum(w * g) approximates the integral of g d mu."""
    _check_same_grid(grid, mu.grid)
    if grid.is_periodic:
        return grid.h * mu.density
    r = grid.nodes
    d = grid.ambient_dim
    jac = unit_sphere_area(d) * r ** (d - 1) * mu.density
    return radial_quadrature_weights(grid, support_radius) * jac


def integrate(fld: ScalarField, mu: WeightedMeasure, support_radius: Optional[float] = None) -> float:
    """Integral of a field against mu.

    Periodic grids use the rectangle rule.  Radial grids use a fourth order
    rule on [0, R], where R is ``support_radius`` (or the field's own
    support radius) when given and the grid length otherwise.
    """
    if support_radius is None:
        support_radius = getattr(fld, "support_radius", None)
    return float(np.dot(measure_weights(fld.grid, mu, support_radius), fld.values))


def inner_product(u: ScalarField, v: ScalarField, mu: WeightedMeasure,
                  support_radius: Optional[float] = None) -> float:
    _check_same_grid(u.grid, v.grid, mu.grid)
    return integrate(ScalarField(u.grid, u.values * v.values), mu, support_radius)


# ---------------------------------------------------------------- transport


def _line_cells(grid: Grid, values: np.ndarray):
    """Cell edges and cell masses of a density viewed on an interval of R."""
    h = grid.h
    if grid.is_periodic:
        edges = (np.arange(grid.points + 1) - 0.5) * h
        return edges, values * h
    if grid.ambient_dim != 1:
        raise UnsupportedError("W2 on radial grids is implemented for d = 1 only")
    half = np.arange(grid.points + 1) * h
    edges = np.concatenate([-half[::-1], half[1:]])
    masses = np.concatenate([values[::-1], values]) * h
    return edges, masses


def _quantiles(edges: np.ndarray, masses: np.ndarray, q: np.ndarray) -> np.ndarray:
    total = masses.sum()
    cdf = np.concatenate([[0.0], np.cumsum(masses / total)])
    j = np.searchsorted(cdf, q, side="right") - 1
    j = np.clip(j, 0, masses.size - 1)
    # skip empty cells: searchsorted(right) already lands on the last cell with cdf <= q
    m = masses[j] / total
    frac = np.where(m > 0, (q - cdf[j]) / np.where(m > 0, m, 1.0), 0.0)
    return edges[j] + np.clip(frac, 0.0, 1.0) * (edges[j + 1] - edges[j])


def wasserstein2_1d(rho_a: ScalarField, rho_b: ScalarField, mu: Optional[WeightedMeasure] = None,
                    quantile_points: Optional[int] = None) -> float:
    """W2 distance between two densities on the same 1-D grid (Lebesgue measure).

    Each density is piecewise constant on the cells around the nodes, so its
    inverse CDF is piecewise linear; the squared quantile difference is
    integrated with the midpoint rule.  Periodic grids are treated as the
    interval [-h/2, L - h/2), not as a circle.
    """
    _check_same_grid(rho_a.grid, rho_b.grid)
    if mu is not None and not mu.is_flat:
        raise UnsupportedError("quantile formula for W2 requires f = 0")
    grid = rho_a.grid
    ea, ma = _line_cells(grid, rho_a.values)
    eb, mb = _line_cells(grid, rho_b.values)
    if ma.sum() <= 0 or mb.sum() <= 0:
        raise ValueError("densities must have positive mass")
    nq = quantile_points or max(4 * ma.size, 4096)
    q = (np.arange(nq) + 0.5) / nq
    diff = _quantiles(ea, ma, q) - _quantiles(eb, mb, q)
    return float(math.sqrt(np.mean(diff * diff)))
