import math

import numpy as np
import pytest

from renyi_langevin.errors import CausticError, CFLError, ConfigurationError, UnsupportedError, VacuumError
from renyi_langevin.fields import Grid, ModelParams, ScalarField, WeightedMeasure, gradient, integrate
from renyi_langevin.functionals import hamiltonian_lagrangian
from renyi_langevin.reference import barenblatt_build, reference_state
from renyi_langevin.solvers import (
    HyperbolicState,
    RadialCells,
    SolverConfig,
    geodesic_solve,
    hyperbolic_solve,
    langevin_solve,
    langevin_step,
    pme_solve,
    solve,
    support_radius_estimate,
)

TWO_PI = 2 * math.pi


def _torus(points=128, f_amp=0.0):
    g = Grid.periodic(points, TWO_PI)
    mu = WeightedMeasure.cosine(g, f_amp) if f_amp else WeightedMeasure.zero(g)
    rho = 1 + 0.3 * np.sin(g.nodes)
    return g, mu, rho / integrate(ScalarField(g, rho), mu)


# ---------------------------------------------------------------- configuration


def test_solver_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=1e-3, t_end=1.0, cfl=1.5)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=1e-3, t_end=1.0, density_floor=-1.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=1e-3, t_end=1.0, diagnostic_stride=0)
    with pytest.raises(ValueError):
        SolverConfig(dt=1e-3, t_end=1.0, scheme="euler")
    n, dt = SolverConfig(dt=0.3, t_end=1.0).step_plan(0.0)
    assert n == 4 and dt == pytest.approx(0.25)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=0.3, t_end=1.0).step_plan(2.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(dt=1e-3, t_end=1.0, density_floor=1e-3).check_floor(np.ones(4))


# ---------------------------------------------------------------- Langevin system on the torus


def test_mass_conserved_over_1000_steps():
    g, mu, rho = _torus(128, 0.3)
    params = ModelParams(2.0, 1.0, c=1.0)
    tr = langevin_solve(rho, 0.2 * np.cos(g.nodes), params, mu, SolverConfig(dt=1e-3, t_end=1.0,
                                                                          diagnostic_stride=100))
    assert tr.steps == 1000
    for r in tr.rhos:
        assert abs(integrate(r, mu) - 1.0) <= 1e-10


def test_homogeneous_potential_relaxation():
    g = Grid.periodic(64, TWO_PI)
    mu = WeightedMeasure.zero(g)
    rho = np.full(g.points, 1 / TWO_PI)
    c = 0.8
    params = ModelParams(2.0, 1.0, c=c)
    tr = langevin_solve(rho, np.zeros(g.points), params, mu, SolverConfig(dt=1e-3, t_end=2.0, diagnostic_stride=100))
    target = -2.0 * rho[0]
    for t, r, p in zip(tr.times, tr.rhos, tr.phis):
        assert np.max(np.abs(r.values - rho)) <= 1e-14
        assert np.allclose(p.values, target * (1 - math.exp(-t / (c * c))), atol=1e-11)


def test_langevin_step_matches_solver():
    g, mu, rho = _torus(64)
    params = ModelParams(2.0, 1.0, c=1.0)
    phi = 0.1 * np.cos(g.nodes)
    cfg = SolverConfig(dt=1e-3, t_end=1e-3)
    r1, p1 = langevin_step(rho, phi, params, mu, cfg)
    tr = langevin_solve(rho, phi, params, mu, cfg)
    assert np.allclose(r1, tr.final_rho, atol=1e-15) and np.allclose(p1, tr.final_phi, atol=1e-15)
    with pytest.raises(UnsupportedError):
        langevin_step(rho, phi, params, WeightedMeasure.zero(Grid.radial(64, 1.0)), cfg)


def test_hamiltonian_nonincreasing_along_flow():
    g, mu, rho = _torus(128)
    params = ModelParams(2.0, 1.0, c=1.0)
    tr = langevin_solve(rho, 0.2 * np.cos(g.nodes), params, mu, SolverConfig(dt=1e-3, t_end=1.0,
                                                                          diagnostic_stride=20))
    H = np.array([hamiltonian_lagrangian(r, p, params, mu)[0] for r, p in zip(tr.rhos, tr.phis)])
    assert np.all(np.diff(H) <= 1e-12)


def test_cfl_error_keeps_partial_trajectory():
    g, mu, rho = _torus(128)
    params = ModelParams(2.0, 1.0, c=0.0)
    with pytest.raises(CFLError) as info:
        solve(rho, None, params, mu, SolverConfig(dt=0.1, t_end=1.0))
    err = info.value
    assert err.suggested_dt is not None and err.suggested_dt < 0.1
    assert err.trajectory is not None and len(err.trajectory) == 1
    assert err.trajectory.error is err


def test_regime_dispatch_guard():
    g, mu, rho = _torus(64)
    with pytest.raises(UnsupportedError):
        langevin_solve(rho, rho, ModelParams(2.0, 1.0, c=0.0), mu, SolverConfig(dt=1e-3, t_end=0.01))


# ---------------------------------------------------------------- porous medium flow


def test_uniform_pme_is_stationary():
    g = Grid.periodic(64, TWO_PI)
    mu = WeightedMeasure.zero(g)
    rho = np.full(g.points, 1 / TWO_PI)
    tr = pme_solve(rho, 2.0, mu, SolverConfig(dt=1e-3, t_end=0.5, diagnostic_stride=100))
    assert np.max(np.abs(tr.final_rho - rho)) <= 1e-15


def test_pme_records_pressure_potential():
    g, mu, rho = _torus(64)
    tr = pme_solve(rho, 2.0, mu, SolverConfig(dt=1e-3, t_end=0.1, diagnostic_stride=10))
    for r, p in zip(tr.rhos, tr.phis):
        assert np.allclose(p.values, -2.0 * r.values)


def test_radial_pme_matches_barenblatt_under_refinement():
    prof = barenblatt_build(2.0, 1.0)
    errs = []
    for points in (128, 256):
        g = Grid.radial(points, 3.5)
        mu = WeightedMeasure.zero(g)
        r1, _ = reference_state(g, 1.0, prof, c=0.0)
        r2, _ = reference_state(g, 2.0, prof, c=0.0)
        dt = 0.4 * g.h ** 2 / (2.0 * float(np.max(r1.values)))
        tr = pme_solve(r1.values, 2.0, mu, SolverConfig(dt=dt, t_end=2.0, diagnostic_stride=10 ** 9), t0=1.0)
        cells = RadialCells(g, mu)
        assert cells.mass(tr.final_rho) == pytest.approx(cells.mass(r1.values), abs=1e-12)
        errs.append(float(np.dot(cells.volume, np.abs(tr.final_rho - r2.values))))
        front = support_radius_estimate(g, tr.final_rho, gamma=2.0)
        assert abs(front - r2.support_radius) <= 2 * g.h
    assert errs[1] < errs[0] / 2


# ---------------------------------------------------------------- geodesic flow


def test_radial_geodesic_matches_exact_transport():
    prof = barenblatt_build(2.0, 1.0)
    errs = []
    for points in (256, 512):
        g = Grid.radial(points, 6.0)
        mu = WeightedMeasure.zero(g)
        params = ModelParams(2.0, 1.0, c="inf")
        r1, p1 = reference_state(g, 1.0, prof, c="inf")
        r2, _ = reference_state(g, 2.0, prof, c="inf")
        tr = geodesic_solve(r1.values, p1.values, mu, SolverConfig(dt=5e-4, t_end=2.0, diagnostic_stride=10 ** 9),
                            t0=1.0, params=params)
        cells = RadialCells(g, mu)
        errs.append(float(np.dot(cells.volume, np.abs(tr.final_rho - r2.values))))
    assert errs[1] < errs[0] and errs[1] <= 1e-3


def test_geodesic_caustic_detected():
    g, mu, rho = _torus(128)
    with pytest.raises(CausticError) as info:
        geodesic_solve(rho, 3.0 * np.cos(g.nodes), mu, SolverConfig(dt=1e-3, t_end=2.0, diagnostic_stride=10))
    # characteristics of phi'' = -3 cos x cross at t = 1/3; the guard fires at 4-fold steepening, t = 1/4
    assert info.value.time == pytest.approx(0.25, abs=5e-3)
    assert info.value.trajectory is not None and len(info.value.trajectory) >= 1


def test_radial_geodesic_needs_params():
    g = Grid.radial(64, 2.0)
    with pytest.raises(UnsupportedError):
        geodesic_solve(np.ones(64), np.zeros(64), WeightedMeasure.zero(g), SolverConfig(dt=1e-3, t_end=0.1))


# ---------------------------------------------------------------- symmetric hyperbolic form


def test_hyperbolic_state_blocks():
    g = Grid.periodic(32, TWO_PI)
    rho = 1 + 0.2 * np.sin(g.nodes)
    st = HyperbolicState.from_density(g, rho, 0.1 * np.cos(g.nodes), 2.0, 1.5)
    assert np.allclose(st.sound_factor, rho)
    assert np.allclose(st.density, rho)
    a0 = st.A0()
    assert np.all(a0 > 0) and np.allclose(a0[:, 1], 1.5 ** 2 / 2)
    assert np.allclose(st.A1(), np.transpose(st.A1(), (0, 2, 1)))
    with pytest.raises(UnsupportedError):
        HyperbolicState(g, st.p, st.u, 2.0, 0.0)
    with pytest.raises(UnsupportedError):
        HyperbolicState(Grid.radial(32, 1.0), st.p, st.u, 2.0, 1.0)


def test_hyperbolic_equilibrium():
    g = Grid.periodic(32, TWO_PI)
    st = HyperbolicState(g, np.full(32, 0.3), np.zeros(32), 2.0, 1.0)
    out = hyperbolic_solve(st, SolverConfig(dt=1e-2, t_end=1.0, diagnostic_stride=10))
    assert np.all(out.final.p == 0.3) and np.all(out.final.u == 0.0)


def test_hyperbolic_matches_langevin_velocity():
    g, mu, rho = _torus(128)
    c = 1.0
    phi = 0.2 * np.cos(g.nodes)
    cfg = SolverConfig(dt=1e-3, t_end=0.5, diagnostic_stride=50)
    tr = langevin_solve(rho, phi, ModelParams(2.0, 1.0, c=c), mu, cfg)
    hy = hyperbolic_solve(HyperbolicState.from_density(g, rho, gradient(ScalarField(g, phi)).values, 2.0, c), cfg)
    for r, p, st in zip(tr.rhos, tr.phis, hy.states):
        assert np.max(np.abs(st.u - gradient(p).values)) <= 1e-9
        assert np.max(np.abs(st.density - r.values)) <= 1e-9


def test_hyperbolic_energy_rate_identity():
    g = Grid.periodic(128, TWO_PI)
    rho = 1 + 0.2 * np.sin(g.nodes)
    st = HyperbolicState.from_density(g, rho, 0.3 * np.cos(g.nodes), 2.0, 1.0)
    out = hyperbolic_solve(st, SolverConfig(dt=1e-3, t_end=0.2, diagnostic_stride=1))
    e = np.array([s.energy() for s in out.states])
    t = np.array(out.times)
    de = np.gradient(e, t, edge_order=2)
    rate = np.array([s.energy_rate(gradient(ScalarField(g, s.u)).values) for s in out.states])
    # d/dt <A0 U, U> = <(d_t A0 + d_x A1) U, U> - 2 <B U, U> along smooth solutions
    assert np.max(np.abs(de - rate)[2:-2]) <= 1e-5


def test_hyperbolic_vacuum_guard():
    g = Grid.periodic(32, TWO_PI)
    st = HyperbolicState(g, np.full(32, -2.0), np.zeros(32), 2.0, 1.0)
    with pytest.raises(VacuumError):
        hyperbolic_solve(st, SolverConfig(dt=1e-3, t_end=0.1))
