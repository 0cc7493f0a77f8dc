import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renyi_langevin.errors import BlowUpError, ConfigurationError, DomainError, UnsupportedError
from renyi_langevin.fields import C_INF, Grid, WeightedMeasure, gradient, integrate
from renyi_langevin.functionals import fisher_information, renyi_entropy, second_moment
from renyi_langevin.reference import (
    alpha2_closed_form,
    barenblatt_build,
    beta1_solve,
    profile_mass,
    reference_entropy_closed_form,
    reference_fisher,
    reference_scale,
    reference_state,
    scaling_ode_solve,
)

LAM = (3 / (2 * math.sqrt(6))) ** (2 / 3)


@pytest.fixture(scope="module")
def prof():
    return barenblatt_build(2.0, 1.0)


@pytest.fixture(scope="module")
def finite_path(prof):
    s = scaling_ode_solve(1.0, prof.k, 1.0, prof.k, (1.0, 3.0), dt=1e-3)
    return beta1_solve(s, prof.lam, prof.gamma, prof.m)


# ---------------------------------------------------------------- Barenblatt profile


def test_barenblatt_gamma2_m1(prof):
    assert prof.lam == pytest.approx(LAM, abs=1e-12)
    assert prof.support_radius == pytest.approx(math.sqrt(6 * LAM), abs=1e-11)
    assert prof.support_radius == pytest.approx(2.08009, abs=1e-5)
    assert prof.A == pytest.approx(4 / 15 * LAM ** 2 * math.sqrt(6 * LAM), rel=1e-10)
    assert prof.M2 == pytest.approx(0.4 * LAM ** 2 * math.sqrt(6 * LAM), rel=1e-10)
    assert prof.A / prof.M2 == pytest.approx(2 / 3, abs=1e-8)


@pytest.mark.parametrize("gamma,m", [(1.5, 1.0), (2.0, 2.0), (3.0, 1.0), (2.0, 3.0), (1.3, 2.5)])
def test_barenblatt_invariants(gamma, m):
    p = barenblatt_build(gamma, m)
    assert profile_mass(gamma, m, p.lam) == pytest.approx(1.0, abs=1e-8)
    assert p.support_radius ** 2 * p.k / 2 == pytest.approx(p.lam, rel=1e-14)
    assert p.A / p.M2 == pytest.approx(2 * p.k ** 2 / (1 - 2 * p.k), abs=1e-8)


def test_barenblatt_mass_by_independent_quadrature(prof):
    # midpoint sum on a fine line, compared to the Jacobi-weight value
    r = (np.arange(400000) + 0.5) * (prof.support_radius / 400000)
    assert 2 * np.sum(prof.density(r)) * (r[1] - r[0]) == pytest.approx(1.0, abs=1e-8)


def test_barenblatt_rejects_bad_parameters():
    with pytest.raises(ConfigurationError):
        barenblatt_build(1.0, 1.0)
    with pytest.raises(ConfigurationError):
        barenblatt_build(2.0, 0.5)


# ---------------------------------------------------------------- scaling ODE


def test_scaling_gradient_flow_limit():
    s = scaling_ode_solve(0.0, 1 / 3, 1.0, None, (1.0, 8.0))
    assert s.u[-1] == pytest.approx(2.0, abs=1e-10)
    assert np.max(np.abs(s.u - s.times ** (1 / 3))) <= 1e-10


def test_scaling_geodesic_limit():
    s = scaling_ode_solve("inf", 1 / 3, 1.0, 1.0, (1.0, 5.0))
    assert np.max(np.abs(s.u - s.times)) <= 1e-12
    assert s.c is C_INF


def test_scaling_finite_c_step_halving():
    coarse = scaling_ode_solve(1.0, 1 / 3, 1.0, 1 / 3, (1.0, 2.0), dt=2e-3)
    fine = scaling_ode_solve(1.0, 1 / 3, 1.0, 1 / 3, (1.0, 2.0), dt=1e-3)
    assert abs(coarse.u[-1] - fine.u[-1]) <= 1e-8
    assert np.max(np.abs(fine.residual[1:-1])) <= 1e-6
    assert np.all(fine.u > 0)


def test_scaling_blowup_reported():
    with pytest.raises(BlowUpError) as info:
        scaling_ode_solve("inf", 1 / 3, 1.0, -1.0, (0.5, 3.0))
    assert info.value.time == pytest.approx(1.5, abs=1e-2)


def test_scaling_input_validation():
    with pytest.raises(ConfigurationError):
        scaling_ode_solve(1.0, 0.7, 1.0, 0.1, (1.0, 2.0))
    with pytest.raises(ConfigurationError):
        scaling_ode_solve(1.0, 1 / 3, 0.0, 0.1, (1.0, 2.0))
    with pytest.raises(ConfigurationError):
        scaling_ode_solve(1.0, 1 / 3, 1.0, None, (1.0, 2.0))
    with pytest.raises(ConfigurationError):
        scaling_ode_solve(1.0, 1 / 3, 1.0, 0.1, (0.0, 2.0))


def test_scaling_interpolation_range(finite_path):
    u, up, _ = finite_path.evaluate(1.2345)
    assert u > 0 and up > 0
    with pytest.raises(DomainError):
        finite_path.evaluate(5.0)


def test_beta1_residual(finite_path, prof):
    t = finite_path.times
    b, rate = finite_path.beta1, finite_path.beta1_rate
    fd = np.gradient(b, t, edge_order=2)
    resid = fd + b + prof.lam * finite_path.u ** (-(prof.gamma - 1) * prof.m)
    assert np.max(np.abs(resid[2:-2])) <= 1e-6
    assert np.max(np.abs(rate - fd)[2:-2]) <= 1e-6


def test_beta1_gradient_flow_is_algebraic(prof):
    s = beta1_solve(scaling_ode_solve(0.0, prof.k, 1.0, None, (1.0, 4.0)), prof.lam, 2.0, 1.0)
    assert np.allclose(s.beta1, -prof.lam / s.u)


# ---------------------------------------------------------------- alpha2


def test_alpha2_examples():
    assert np.all(alpha2_closed_form(1.0, 1.0, 0.0, np.linspace(0, 3, 7)) == 0)
    assert np.allclose(alpha2_closed_form(0.5, 0.0, 1.0, np.linspace(0, 3, 7)), -4.0)
    assert float(alpha2_closed_form(1.0, 1.0, 1.0, 0.0)) == pytest.approx(-0.5)
    with pytest.raises(UnsupportedError):
        alpha2_closed_form("inf", 1.0, 1.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.5, 3.0), st.floats(-0.4, 2.0))
def test_alpha2_solves_riccati(c, C1, C2):
    t = np.linspace(0.0, 2.0, 20001)
    a = alpha2_closed_form(c, C1, C2, t)
    da = np.gradient(a, t, edge_order=2)
    resid = c * c * (da + a * a) + a
    assert np.max(np.abs(resid[2:-2])) <= 1e-4 * (1 + np.max(np.abs(a)))


# ---------------------------------------------------------------- sampled states


@pytest.mark.parametrize("t", [1.0, 2.0, 8.0])
def test_reference_state_laws(prof, t):
    g = Grid.radial(3000, 6.0)
    mu = WeightedMeasure.zero(g)
    rho, _ = reference_state(g, t, prof, c=0.0)
    u = t ** prof.k
    assert integrate(rho, mu) == pytest.approx(1.0, abs=1e-8)
    assert renyi_entropy(rho, 2.0, mu) == pytest.approx(prof.A * u ** (2 - 1 / prof.k), rel=1e-6)
    assert fisher_information(rho, 2.0, mu) == pytest.approx((1 - 2 * prof.k) * prof.A * u ** (2 * (1 - 1 / prof.k)),
                                                             rel=1e-6)
    assert second_moment(rho, mu) == pytest.approx(u * u * prof.M2, rel=1e-6)
    last = int(np.max(np.nonzero(rho.values > 0)))
    assert abs(g.nodes[last] - u * prof.support_radius) <= g.h


def test_reference_entropy_closed_form(prof):
    assert reference_entropy_closed_form(prof, 1.0) == pytest.approx(prof.A)
    assert reference_entropy_closed_form(prof, 8.0 ** (1 / 3)) == pytest.approx(prof.A / 2, rel=1e-12)
    u, _ = reference_scale(prof, 2.0, c="inf")
    assert reference_entropy_closed_form(prof, u) == pytest.approx(prof.A / 2, rel=1e-12)
    assert reference_fisher(prof, 1.0) == pytest.approx(prof.A / 3)
    with pytest.raises(DomainError):
        reference_entropy_closed_form(prof, 0.0)


def test_reference_state_guards(prof):
    with pytest.raises(UnsupportedError):
        reference_state(Grid.periodic(64), 1.0, prof, c=0.0)
    with pytest.raises(DomainError):
        reference_state(Grid.radial(64, 1.0), 1.0, prof, c=0.0)
    with pytest.raises(ConfigurationError):
        reference_state(Grid.radial(64, 6.0, 2), 1.0, prof, c=0.0)
    with pytest.raises(ConfigurationError):
        reference_state(Grid.radial(64, 6.0), 1.0, prof, c=1.0)


def _langevin_residuals(prof, path, t, g, eps=1e-4):
    """Continuity and HJ residuals of the exact finite-c state at interior support nodes (f = 0)."""
    c2 = path.c ** 2
    rho, phi = reference_state(g, t, prof, path)
    rp, pp = reference_state(g, t + eps, prof, path)
    rm, pm = reference_state(g, t - eps, prof, path)
    rho_t = (rp.values - rm.values) / (2 * eps)
    phi_t = (pp.values - pm.values) / (2 * eps)
    dphi = gradient(phi).values
    flux = gradient(rho.with_values(rho.values * dphi)).values
    pressure = 2.0 * rho.values
    inner = g.nodes < 0.9 * rho.support_radius
    cont = (rho_t + flux)[inner]
    hj = (c2 * (phi_t + 0.5 * dphi ** 2) + phi.values + pressure)[inner]
    return np.max(np.abs(cont)), np.max(np.abs(hj))


def test_reference_state_solves_langevin_system(prof, finite_path):
    res = [_langevin_residuals(prof, finite_path, 1.5, Grid.radial(n, 6.0)) for n in (400, 800)]
    # HJ holds exactly for the quadratic potential; continuity converges with the stencil
    assert res[1][1] <= 1e-6
    assert res[1][0] <= res[0][0] / 3.5
    assert res[1][0] <= 1e-4


def test_outside_branch_offset_decays_exponentially(prof, finite_path):
    g = Grid.radial(400, 6.0)
    t = 1.5
    _, phi = reference_state(g, t, prof, finite_path)
    r = g.nodes[-1]
    a2 = float(alpha2_closed_form(1.0, *finite_path.alpha2_constants, t))
    assert phi.values[-1] == pytest.approx(0.5 * a2 * r * r + math.exp(-t), rel=1e-14)
