import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renyi_langevin.errors import CurvatureConventionError, GridMismatchError, NonFiniteError
from renyi_langevin.fields import (
    C_INF,
    DensityField,
    Grid,
    ModelParams,
    ScalarField,
    WeightedMeasure,
    bakry_emery_curvature,
    gradient,
    inner_product,
    integrate,
    parse_speed,
    wasserstein2_1d,
    weighted_divergence_adjoint,
    witten_laplacian,
)
from renyi_langevin.reference import barenblatt_build

TWO_PI = 2 * math.pi


@pytest.fixture
def torus():
    return Grid.periodic(256, TWO_PI)


def _field(grid, fn):
    return ScalarField(grid, grid.sample(fn))


# ---------------------------------------------------------------- types


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid.periodic(8)
    with pytest.raises(ValueError):
        Grid.periodic(32, -1.0)
    with pytest.raises(ValueError):
        Grid("periodic-1d", 32, 1.0, 2)


def test_radial_nodes_are_cell_centres():
    g = Grid.radial(20, 2.0, 3)
    assert g.h == pytest.approx(0.1)
    assert np.allclose(g.nodes, (np.arange(20) + 0.5) * 0.1)
    assert np.all(g.nodes > 0)


def test_fields_reject_bad_samples(torus):
    with pytest.raises(GridMismatchError):
        ScalarField(torus, np.zeros(10))
    bad = np.zeros(torus.points)
    bad[3] = np.nan
    with pytest.raises(NonFiniteError):
        ScalarField(torus, bad)
    with pytest.raises(ValueError):
        DensityField(torus, -np.ones(torus.points))


def test_density_mass_tolerance(torus):
    DensityField(torus, np.full(torus.points, 1 / TWO_PI), mass_tol=1e-12)
    with pytest.raises(ValueError):
        DensityField(torus, np.full(torus.points, 2 / TWO_PI), mass_tol=1e-6)


def test_periodic_measure_must_be_periodic(torus):
    with pytest.raises(ValueError):
        WeightedMeasure.from_callables(torus, lambda x: x, lambda x: 1 + 0 * x, lambda x: 0 * x)


def test_model_params_invariants():
    p = ModelParams(2.0, 1.0)
    assert p.k == pytest.approx(1 / 3)
    assert p.m * (p.gamma - 1) + 1 == pytest.approx(1 / p.k - 1, abs=1e-15)
    for bad in (dict(gamma=1.0, m=1.0), dict(gamma=2.0, m=1.0, n=2), dict(gamma=2.0, m=1.0, potential_sign=0)):
        with pytest.raises(ValueError):
            ModelParams(**bad)
    assert ModelParams(2.0, 1.0, c="inf").c is C_INF
    assert parse_speed(math.inf) is C_INF


# ---------------------------------------------------------------- operators


def test_gradient_of_sin_is_cos(torus):
    d = gradient(_field(torus, np.sin)).values
    assert np.max(np.abs(d - np.cos(torus.nodes))) <= 1e-10


def test_gradient_of_constant_is_zero(torus):
    assert np.max(np.abs(gradient(ScalarField(torus, 3.0)).values)) <= 1e-12
    g = Grid.radial(64, 2.0)
    assert np.max(np.abs(gradient(ScalarField(g, 3.0)).values)) <= 1e-12


def test_radial_gradient_second_order():
    errs = []
    for n in (64, 128, 256):
        g = Grid.radial(n, 2.0)
        d = gradient(_field(g, lambda r: np.sin(r) * r * r)).values
        exact = 2 * g.nodes * np.sin(g.nodes) + g.nodes ** 2 * np.cos(g.nodes)
        errs.append(np.max(np.abs(d - exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9)


def test_radial_gradient_of_half_square():
    g = Grid.radial(64, 2.0)
    d = gradient(_field(g, lambda r: 0.5 * r * r)).values
    assert np.max(np.abs(d - g.nodes)) <= 1e-12


def test_adjoint_examples(torus):
    flat = WeightedMeasure.zero(torus)
    out = weighted_divergence_adjoint(_field(torus, np.cos), flat).values
    assert np.max(np.abs(out - np.sin(torus.nodes))) <= 1e-10
    out = weighted_divergence_adjoint(ScalarField(torus, 2.0), flat).values
    assert np.max(np.abs(out)) <= 1e-12
    a = 0.4
    mu = WeightedMeasure.cosine(torus, a)
    out = weighted_divergence_adjoint(ScalarField(torus, 1.0), mu).values
    assert np.max(np.abs(out + a * np.sin(torus.nodes))) <= 1e-10


def test_witten_laplacian_examples(torus):
    flat = WeightedMeasure.zero(torus)
    out = witten_laplacian(_field(torus, np.sin), flat).values
    assert np.max(np.abs(out + np.sin(torus.nodes))) <= 1e-10
    assert np.max(np.abs(witten_laplacian(ScalarField(torus, 1.5), flat).values)) <= 1e-12


def test_witten_laplacian_on_line_converges_second_order():
    # f = x^2/2 and phi = x^2/2 give L phi = 1 - x^2
    errs = []
    for n in (128, 256, 512):
        line = Grid.radial(n, 2.0)
        mu = WeightedMeasure.quadratic(line, 1.0)
        out = witten_laplacian(_field(line, lambda x: 0.5 * x * x), mu).values
        errs.append(np.max(np.abs(out - (1 - line.nodes ** 2))))
    assert errs[-1] <= 1e-4
    assert np.all(np.log2(np.array(errs[:-1]) / np.array(errs[1:])) >= 1.9)


def test_curvature_examples():
    line = Grid.radial(64, 2.0)
    assert np.all(bakry_emery_curvature(WeightedMeasure.zero(line), ModelParams(2.0, 3.0)).values == 0)
    assert np.all(bakry_emery_curvature(WeightedMeasure.zero(line), ModelParams(2.0, 1.0)).values == 0)
    mu = WeightedMeasure.quadratic(line, 1.0)
    ric = bakry_emery_curvature(mu, ModelParams(2.0, 2.0, n=1)).values
    assert np.max(np.abs(ric - (1 - line.nodes ** 2))) <= 1e-12
    with pytest.raises(CurvatureConventionError):
        bakry_emery_curvature(mu, ModelParams(2.0, 1.0, n=1))


def test_integrate_examples(torus):
    flat = WeightedMeasure.zero(torus)
    assert integrate(ScalarField(torus, 1.0), flat) == pytest.approx(TWO_PI, abs=1e-12)
    assert abs(integrate(_field(torus, lambda x: np.sin(x) ** 2), flat) - math.pi) <= 1e-12


def test_integrate_barenblatt_mass():
    prof = barenblatt_build(2.0, 1.0)
    g = Grid.radial(400, 3.0)
    rho = DensityField(g, prof.density(g.nodes), support_radius=prof.support_radius)
    assert abs(integrate(rho, WeightedMeasure.zero(g)) - 1.0) <= 1e-8


def test_radial_quadrature_fourth_order():
    errs = []
    for n in (32, 64, 128):
        g = Grid.radial(n, 1.5, 3)
        val = integrate(_field(g, lambda r: np.exp(-r * r)), WeightedMeasure.zero(g))
        r = 1.5
        exact = 4 * math.pi * (math.sqrt(math.pi) / 4 * math.erf(r) - r * math.exp(-r * r) / 2)
        errs.append(abs(val - exact))
    assert errs[1] / errs[2] > 12


def test_w2_examples():
    g = Grid.periodic(512, 4.0)
    x = g.nodes
    a = DensityField(g, np.where(x < 1.0, 1.0, 0.0))
    b = DensityField(g, np.where(x < 2.0, 0.5, 0.0))
    assert wasserstein2_1d(a, a) == pytest.approx(0.0, abs=1e-12)
    assert wasserstein2_1d(a, b) == pytest.approx(1 / math.sqrt(3), abs=5e-3)
    s = 1.0
    bump = lambda c: np.exp(-((x - c) / (2 * g.h)) ** 2)
    assert wasserstein2_1d(DensityField(g, bump(1.0)), DensityField(g, bump(1.0 + s))) == pytest.approx(s, rel=1e-3)


# ---------------------------------------------------------------- properties


def _trig(rng, x, modes=4, scale=1.0):
    out = np.zeros_like(x)
    for j in range(1, modes + 1):
        a, b = rng.normal(size=2) * scale / j ** 2
        out += a * np.cos(j * x) + b * np.sin(j * x)
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(-0.8, 0.8))
def test_adjointness_random(seed, amp):
    rng = np.random.default_rng(seed)
    g = Grid.periodic(128, TWO_PI)
    x = g.nodes
    mu = WeightedMeasure.cosine(g, amp)
    u = ScalarField(g, _trig(rng, x))
    X = ScalarField(g, _trig(rng, x))
    lhs = inner_product(gradient(u), X, mu)
    rhs = inner_product(u, weighted_divergence_adjoint(X, mu), mu)
    scale = math.sqrt(inner_product(u, u, mu) * inner_product(X, X, mu)) + 1.0
    assert abs(lhs - rhs) <= 1e-8 * scale


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(-0.8, 0.8))
def test_integration_by_parts_random(seed, amp):
    rng = np.random.default_rng(seed)
    g = Grid.periodic(128, TWO_PI)
    mu = WeightedMeasure.cosine(g, amp)
    phi = ScalarField(g, _trig(rng, g.nodes))
    psi = ScalarField(g, _trig(rng, g.nodes))
    lhs = inner_product(witten_laplacian(phi, mu), psi, mu)
    rhs = -inner_product(gradient(phi), gradient(psi), mu)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(rhs))


@settings(max_examples=25, deadline=None)
@given(st.floats(1.0, 6.0), st.integers(1, 3))
def test_flat_weight_has_zero_curvature(m_extra, n):
    g = Grid.radial(32, 1.0, n)
    ric = bakry_emery_curvature(WeightedMeasure.zero(g), ModelParams(2.0, n + m_extra, n=n)).values
    assert np.all(ric == 0.0)
