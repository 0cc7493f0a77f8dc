import math

import numpy as np
import pytest

from renyi_langevin.errors import ConfigurationError, DegeneracyError, SparseTrajectoryError, UnsupportedError
from renyi_langevin.fields import DensityField, Grid, ModelParams, ScalarField, WeightedMeasure
from renyi_langevin.reference import barenblatt_build, beta1_solve, reference_state, scaling_ode_solve
from renyi_langevin.solvers import SolverConfig, geodesic_solve, langevin_solve, pme_solve
from renyi_langevin.wentropy import (
    coefficient_residuals,
    coefficients_build,
    fd_weights,
    interior_mask,
    relative_quantities,
    time_derivative,
    verify_variational_identity,
    w_entropy,
    w_formula_sides,
    w_series,
)

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def prof():
    return barenblatt_build(2.0, 1.0)


def _torus(points=256):
    g = Grid.periodic(points, TWO_PI)
    return g, WeightedMeasure.zero(g), (1 + 0.3 * np.sin(g.nodes)) / TWO_PI


# ---------------------------------------------------------------- time differences


def test_fd_weights_exact_on_quartics():
    t = np.linspace(1.0, 2.0, 21)
    v = 3 * t ** 4 - t ** 3 + 2 * t
    assert np.allclose(time_derivative(v, t), 12 * t ** 3 - 3 * t ** 2 + 2, atol=1e-9)
    assert np.allclose(time_derivative(v, t, deriv=2), 36 * t ** 2 - 6 * t, atol=1e-7)
    assert np.allclose(fd_weights([-1, 0, 1], 1), [-0.5, 0.0, 0.5])


def test_time_derivative_guards():
    with pytest.raises(SparseTrajectoryError):
        time_derivative([1, 2, 3], [0, 1, 2])
    with pytest.raises(SparseTrajectoryError):
        time_derivative(np.zeros(6), [0, 1, 2, 3, 5, 6])
    assert interior_mask(7).tolist() == [False, False, True, True, True, False, False]


# ---------------------------------------------------------------- coefficients


def test_closed_form_coefficients():
    k = 1 / 3
    co0 = coefficients_build(ModelParams(2.0, 1.0, c=0.0), interval=(1.0, 3.0))
    a, b, alpha = co0.at(1.0)
    assert (float(a), float(b)) == pytest.approx((4 / 3, 1.0))
    assert float(alpha) == pytest.approx(k)
    coi = coefficients_build(ModelParams(2.0, 1.0, c="inf"), interval=(1.0, 3.0))
    a, b, _ = coi.at(1.0)
    assert (float(a), float(b)) == pytest.approx((2.0, 1.0))
    t = np.linspace(1.0, 3.0, 9)
    assert np.allclose(co0.at(t)[1], t ** (2 - 2 * k))
    assert np.allclose(coi.at(t)[0], (1 / k - 1) * t ** (1 / k - 2))


@pytest.mark.parametrize("c", [0.0, 0.5, 1.0, 2.0, "inf"])
def test_coefficient_consistency(c):
    params = ModelParams(2.0, 1.0, c=c)
    if params.regime.name == "LANGEVIN":
        # b stays positive only on a short window for small c
        s = scaling_ode_solve(c, params.k, 1.0, params.k, (1.0, 1.4), dt=1e-3)
        co = coefficients_build(params, s)
    else:
        co = coefficients_build(params, interval=(1.0, 1.4))
    first, second = coefficient_residuals(co)
    assert np.all(co.b > 0)
    assert np.max(np.abs(first)) <= 1e-10
    assert np.max(np.abs(second[2:-2])) <= 1e-5


def test_finite_c_alpha_comes_from_scaling_path():
    params = ModelParams(2.0, 1.0, c=1.0)
    s = scaling_ode_solve(1.0, params.k, 1.0, 0.9, (1.0, 1.4), dt=1e-3)
    co = coefficients_build(params, s)
    assert np.allclose(co.alpha, s.u_prime / s.u)
    assert float(co.at(1.2)[2]) == pytest.approx(float(s.alpha1(1.2)), rel=1e-10)


def test_coefficient_guards():
    params = ModelParams(2.0, 1.0, c=1.0)
    with pytest.raises(ConfigurationError):
        coefficients_build(params)
    s = scaling_ode_solve(2.0, params.k, 1.0, params.k, (1.0, 2.0))
    with pytest.raises(ConfigurationError):
        coefficients_build(params, s)
    s = scaling_ode_solve(1.0, params.k, 1.0, params.k, (1.0, 2.0))
    with pytest.raises(ConfigurationError):
        coefficients_build(params, s, b_delta=0.0)
    with pytest.raises(DegeneracyError):
        coefficients_build(params, s, b_delta=1.0, b_prime_delta=-20.0)
    co = coefficients_build(params, s)
    with pytest.raises(ConfigurationError):
        co.at(3.0)


# ---------------------------------------------------------------- relative quantities and W


def test_relative_quantities_examples(prof):
    g = Grid.radial(3000, 6.0)
    mu = WeightedMeasure.zero(g)
    co = coefficients_build(ModelParams(2.0, 1.0, c=0.0), interval=(1.0, 8.0))
    rho8, _ = reference_state(g, 8.0, prof, c=0.0)
    H, I = relative_quantities(rho8, 8.0, prof, co, mu)
    assert abs(H) <= 1e-8 and abs(I) <= 1e-8
    H, I = relative_quantities(rho8, 8.0, prof, co, mu, reference=rho8)
    assert H == 0.0 and I == 0.0
    rho0, _ = reference_state(g, 1.0, prof, c=0.0)
    H, _ = relative_quantities(rho0, 8.0, prof, co, mu)
    assert H == pytest.approx(prof.A / 2, rel=1e-7)
    tg, tmu, u = _torus()
    with pytest.raises(UnsupportedError):
        relative_quantities(DensityField(tg, u), 8.0, prof, co, tmu, reference=rho8)


def test_w_entropy_trivial_cases():
    assert w_entropy(0.3, 0.0, 0.0, 1.5) == 0.0
    assert w_entropy(1.0, 2.0, 3.0, 4.0) == pytest.approx(11.0)


@pytest.mark.parametrize("c", [0.0, 1.0, "inf"])
def test_w_series_vanishes_on_reference(prof, c):
    g = Grid.radial(2000, 6.0)
    mu = WeightedMeasure.zero(g)
    params = ModelParams(2.0, 1.0, c=c)
    scaling = None
    if params.regime.name == "LANGEVIN":
        scaling = beta1_solve(scaling_ode_solve(c, params.k, 1.0, params.k, (1.0, 2.0)), prof.lam, 2.0, 1.0)
        co = coefficients_build(params, scaling)
    else:
        co = coefficients_build(params, interval=(1.0, 2.0))
    times = 1.0 + 0.02 * np.arange(8)
    states = [reference_state(g, float(t), prof, scaling=scaling, c=c) for t in times]
    ser = w_series(times, [s[0] for s in states], [s[1] for s in states], params, mu, co, prof)
    for arr in (ser.H, ser.I, ser.W, ser.lhs, ser.rhs):
        assert np.max(np.abs(arr)) <= 1e-6 * prof.A
    lhs, rhs = w_formula_sides(ser, float(times[3]))
    assert abs(lhs) <= 1e-6 and abs(rhs) <= 1e-6
    with pytest.raises(SparseTrajectoryError):
        w_formula_sides(ser, 1.05)
    vl, vr = verify_variational_identity(times, [s[0] for s in states], [s[1] for s in states],
                                         co.alpha_at, params, mu)
    assert np.max(np.abs(vr)) <= 1e-8
    assert np.max(np.abs(vl - vr)[interior_mask(times.size)]) <= 1e-5 * prof.A


def test_w_series_needs_enough_samples(prof):
    g, mu, u = _torus()
    params = ModelParams(2.0, 1.0, c=0.0)
    co = coefficients_build(params, interval=(1.0, 2.0))
    rho = DensityField(g, u)
    phi = ScalarField(g, 0.0)
    with pytest.raises(SparseTrajectoryError):
        w_series([1.0, 1.1, 1.2], [rho] * 3, [phi] * 3, params, mu, co, prof)
    with pytest.raises(ConfigurationError):
        w_series([1.0, 1.1, 1.2, 1.3, 1.4], [rho] * 4, [phi] * 5, params, mu, co, prof)


# ---------------------------------------------------------------- along numerical flows


@pytest.fixture(scope="module")
def pme_series(prof):
    g, mu, rho0 = _torus(128)
    params = ModelParams(2.0, 1.0, c=0.0)
    # from t = 8 the reference entropy A/2 lies below that of any torus density, so H >= 0
    tr = pme_solve(rho0, 2.0, mu, SolverConfig(dt=1e-3, t_end=9.0, diagnostic_stride=20), t0=8.0)
    co = coefficients_build(params, interval=(8.0, 9.0))
    return tr, w_series(tr.time_array, tr.rhos, tr.phis, params, mu, co, prof)


def test_pme_flow_w_identity_and_monotonicity(pme_series):
    _, ser = pme_series
    inner = ser.interior
    rel = np.abs(ser.lhs - ser.rhs) / np.maximum(np.abs(ser.rhs), 1e-8)
    assert np.max(rel[inner]) <= 0.02
    assert np.min(ser.dW[inner]) >= -1e-8


def test_pme_flow_scaled_entropy_convex(pme_series, prof):
    _, ser = pme_series
    k = prof.k
    g = ser.times ** (2 - 2 * k) * ser.H
    assert np.min(np.diff(g, 2)) >= -1e-8


def test_pme_flow_entropy_comparison(pme_series, prof):
    # H and W start nonnegative, so the flow's entropy stays above the reference one
    _, ser = pme_series
    assert ser.H[0] >= 0 and ser.W[0] >= 0
    ref = prof.A * ser.times ** (2 * prof.k - 1)
    assert np.all(ser.ent >= ref)


def test_geodesic_second_variation_cross_check(prof):
    # alpha = 0 and c = inf: the finite-difference Ent'' matches the quadrature
    g, mu, rho0 = _torus(256)
    params = ModelParams(2.0, 1.0, c="inf")
    tr = geodesic_solve(rho0, 0.1 * np.cos(g.nodes), mu, SolverConfig(dt=1e-3, t_end=1.5, diagnostic_stride=10),
                        t0=1.0)
    lhs, rhs = verify_variational_identity(tr.time_array, tr.rhos, tr.phis, 0.0, params, mu)
    inner = interior_mask(lhs.size)
    assert np.max(np.abs(lhs - rhs)[inner] / np.abs(rhs[inner])) <= 1e-3


def test_langevin_flow_w_information_identity(prof):
    g, mu, rho0 = _torus(256)
    params = ModelParams(2.0, 1.0, c=1.0)
    s = scaling_ode_solve(1.0, params.k, 1.0, params.k, (1.0, 2.0))
    co = coefficients_build(params, s)
    tr = langevin_solve(rho0, -2.0 * rho0, params, mu, SolverConfig(dt=1e-3, t_end=2.0, diagnostic_stride=10),
                        t0=1.0)
    ser = w_series(tr.time_array, tr.rhos, tr.phis, params, mu, co, prof)
    inner = ser.interior
    rel = np.abs(ser.lhs - ser.rhs)[inner] / np.abs(ser.rhs[inner])
    assert np.max(rel) <= 0.03
