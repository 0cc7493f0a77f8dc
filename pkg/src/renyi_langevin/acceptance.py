"""The twelve acceptance checks, each runnable on its own.

Every check returns a CriterionResult with the measured numbers it was
judged on.  ``run_acceptance`` runs a selection and prints one line per
check.
"""
from __future__ import annotations

import hashlib
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from .errors import NumericalConsistencyError
from .fields import (
    DensityField,
    Grid,
    ModelParams,
    PotentialField,
    ScalarField,
    WeightedMeasure,
    bakry_emery_curvature,
    gradient,
    integrate,
    weighted_divergence_adjoint,
    witten_laplacian,
)
from .functionals import (
    PotentialSpec,
    fisher_information,
    fisher_information_forms,
    hamiltonian_lagrangian,
    hessian_quadratic_form,
    kinetic_energy,
    relative_entropy,
    renyi_entropy,
    second_moment,
)
from .reference import (
    barenblatt_build,
    beta1_solve,
    reference_fisher,
    reference_state,
    scaling_ode_solve,
)
from .solvers import SolverConfig, geodesic_solve, langevin_solve, pme_solve, support_radius_estimate
from .solvers.radial import RadialCells
from .wentropy import coefficients_build, interior_mask, time_derivative, w_series

GAMMA = 2.0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: Dict[str, object] = field(default_factory=dict)
    note: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{tag}] criterion {self.number:2d} {self.title}: {parts} ({self.seconds:.1f}s)"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.3e}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def _torus_data(points: int):
    grid = Grid.periodic(points)
    mu = WeightedMeasure.zero(grid)
    rho0 = (1.0 + 0.3 * np.sin(grid.nodes)) / (2 * math.pi)
    return grid, mu, rho0


def _mismatch(series, picks):
    rel = np.abs(series.lhs - series.rhs) / np.maximum(np.abs(series.rhs), 1e-8)
    return float(np.max(rel[picks]))


def _ten_interior(n: int) -> np.ndarray:
    inner = np.nonzero(interior_mask(n))[0]
    return inner[np.linspace(0, inner.size - 1, 10).round().astype(int)]


# ---------------------------------------------------------------- 1-3: reference family


def criterion_1() -> CriterionResult:
    prof = barenblatt_build(GAMMA, 1.0)
    grid = Grid.radial(4096, 4.0, 1)
    mu = WeightedMeasure.zero(grid)
    rho, _ = reference_state(grid, 1.0, prof, c=0.0)
    ent_grid = renyi_entropy(rho, GAMMA, mu)
    m2_grid = second_moment(rho, mu)
    ratio = prof.A / prof.M2
    k = prof.k
    ok = (abs(prof.lam - 0.721124) <= 1e-5 and abs(prof.A - 0.288450) <= 1e-5
          and abs(prof.M2 - 0.432675) <= 1e-5 and abs(ratio - 2.0 / 3.0) <= 1e-6
          and abs(ratio - 2 * k * k / (1 - 2 * k)) <= 1e-6
          and abs(ent_grid - prof.A) <= 1e-5 and abs(m2_grid - prof.M2) <= 1e-5)
    return CriterionResult(1, "Barenblatt constants", ok, {
        "lam": prof.lam, "A": prof.A, "M2": prof.M2, "A/M2": ratio,
        "A_grid": ent_grid, "M2_grid": m2_grid})


def criterion_2() -> CriterionResult:
    prof = barenblatt_build(GAMMA, 1.0)
    grid = Grid.radial(4096, 10.0, 1)
    mu = WeightedMeasure.zero(grid)
    errs = []
    for t in (1.0, 2.0, 4.0):
        r0, _ = reference_state(grid, t, prof, c=0.0)
        rinf, _ = reference_state(grid, t, prof, c="inf")
        errs.append(_rel(renyi_entropy(r0, GAMMA, mu), prof.A * t ** (2 * prof.k - 1)))
        errs.append(_rel(renyi_entropy(rinf, GAMMA, mu), prof.A / t))
    fis = []
    for u in (1.0, 2.0):
        # the c = inf family has u(t) = t
        r, _ = reference_state(grid, u, prof, c="inf")
        fis.append(_rel(fisher_information(r, GAMMA, mu), reference_fisher(prof, u)))
    ok = max(errs) <= 1e-5 and max(fis) <= 1e-5
    return CriterionResult(2, "entropy and Fisher scaling laws", ok,
                           {"max_entropy_rel_err": max(errs), "max_fisher_rel_err": max(fis)})


def criterion_3() -> CriterionResult:
    prof = barenblatt_build(GAMMA, 1.0)
    grid = Grid.radial(4096, 6.0, 1)
    mu = WeightedMeasure.zero(grid)
    times = 1.0 + 0.1 * np.arange(10)
    worst = {}
    for c in (0.0, 1.0, "inf"):
        params = ModelParams(GAMMA, 1.0, 1, c)
        scaling = None
        if params.regime.name == "LANGEVIN":
            scaling = beta1_solve(scaling_ode_solve(c, params.k, 1.0, 1.0 / 3.0, [1.0, 2.0]),
                                  prof.lam, GAMMA, 1.0)
            coeffs = coefficients_build(params, scaling)
        else:
            coeffs = coefficients_build(params, interval=[1.0, 2.0])
        states = [reference_state(grid, float(t), prof, scaling=scaling, c=c) for t in times]
        ser = w_series(times, [s[0] for s in states], [s[1] for s in states], params, mu, coeffs, prof)
        vals = [ser.W, ser.H, ser.I, ser.lhs, ser.rhs]
        worst[f"c={c}"] = float(max(np.max(np.abs(v)) for v in vals))
    ok = max(worst.values()) <= 1e-6 * prof.A
    return CriterionResult(3, "rigidity of the reference family", ok, worst)


# ---------------------------------------------------------------- 4-7: identity checks on the torus


def _pme_w_run(points: int, dt: float, stride: int):
    grid, mu, rho0 = _torus_data(points)
    params = ModelParams(GAMMA, 1.0, 1, 0.0)
    tr = pme_solve(rho0, GAMMA, mu, SolverConfig(dt=dt, t_end=2.0, diagnostic_stride=stride), t0=1.0)
    coeffs = coefficients_build(params, interval=[1.0, 2.0])
    return w_series(tr.time_array, tr.rhos, tr.phis, params, mu, coeffs, barenblatt_build(GAMMA, 1.0))


def criterion_4() -> CriterionResult:
    # the stride is kept, so halving dt also halves the spacing seen by the time stencils
    coarse = _pme_w_run(512, 4e-5, 250)
    fine = _pme_w_run(1024, 2e-5, 250)
    picks = _ten_interior(coarse.times.size)
    fine_picks = np.array([int(np.argmin(np.abs(fine.times - t))) for t in coarse.times[picks]])
    m_coarse = _mismatch(coarse, picks)
    m_fine = _mismatch(fine, fine_picks)
    dw_min = float(np.min(coarse.dW[interior_mask(coarse.times.size)]))
    ok = m_coarse <= 0.02 and dw_min >= -1e-8 and m_fine <= 0.5 * m_coarse
    return CriterionResult(4, "W-entropy formula c = 0", ok, {
        "mismatch": m_coarse, "mismatch_refined": m_fine, "reduction": m_coarse / max(m_fine, 1e-300),
        "min_dW": dw_min})


def criterion_5() -> CriterionResult:
    grid, mu, rho0 = _torus_data(512)
    params = ModelParams(GAMMA, 1.0, 1, 1.0)
    scaling = scaling_ode_solve(1.0, params.k, 1.0, 1.0 / 3.0, [1.0, 2.0])
    coeffs = coefficients_build(params, scaling, b_delta=1.0, b_prime_delta=0.0)
    tr = langevin_solve(rho0, -2.0 * rho0, params, mu,
                        SolverConfig(dt=1e-3, t_end=2.0, diagnostic_stride=10), t0=1.0)
    ser = w_series(tr.time_array, tr.rhos, tr.phis, params, mu, coeffs, barenblatt_build(GAMMA, 1.0))
    n = ser.times.size
    mid = np.zeros(n, bool)
    mid[n // 4: 3 * n // 4 + 1] = True
    mismatch = _mismatch(ser, mid)
    inner = interior_mask(n)
    lhs_min = float(np.min(ser.lhs[inner]))
    rhs_min = float(np.min(ser.rhs[inner]))
    ok = mismatch <= 0.03 and lhs_min >= -1e-8 and rhs_min >= -1e-8
    return CriterionResult(5, "W-entropy-information formula c = 1", ok, {
        "mismatch": mismatch, "min_lhs": lhs_min, "min_rhs": rhs_min,
        "b_range": [float(np.min(coeffs.b)), float(np.max(coeffs.b))]})


def criterion_6() -> CriterionResult:
    grid, mu, rho0 = _torus_data(512)
    params = ModelParams(GAMMA, 1.0, 1, "inf")
    tr = geodesic_solve(rho0, 0.1 * np.cos(grid.nodes), mu,
                        SolverConfig(dt=1e-3, t_end=2.0, diagnostic_stride=10), t0=1.0)
    coeffs = coefficients_build(params, interval=[1.0, 2.0])
    ser = w_series(tr.time_array, tr.rhos, tr.phis, params, mu, coeffs, barenblatt_build(GAMMA, 1.0))
    inner = interior_mask(ser.times.size)
    mismatch = _mismatch(ser, inner)
    dw_min = float(np.min(ser.dW[inner]))
    kin = [kinetic_energy(r, p, mu) for r, p in zip(tr.rhos, tr.phis)]
    ok = mismatch <= 0.03 and dw_min >= -1e-8
    return CriterionResult(6, "W-entropy formula c = inf", ok, {
        "mismatch": mismatch, "min_dW": dw_min, "kinetic_drift": (max(kin) - min(kin)) / kin[0]})


def lagrangian_rates(rho: DensityField, phi: ScalarField, params: ModelParams, mu: WeightedMeasure):
    """(dL/dt, d^2L/dt^2) along the Langevin flow from spatial integrals.

    dL/dt = -int <grad(phi + 2 V'), grad phi> rho with V' = sign p, and
    d^2L/dt^2 = (2/c^2) int |grad phi + sign grad p|^2 rho - 2 sign Hess_Ent(grad phi, grad phi),
    p = gamma rho^{gamma-1}/(gamma-1).
    """
    sign = params.potential_sign
    gamma = params.gamma
    g = rho.grid
    dphi = gradient(phi).values
    dp = gradient(ScalarField(g, gamma * rho.values ** (gamma - 1) / (gamma - 1))).values
    r = rho.values
    first = -integrate(ScalarField(g, (dphi + 2 * sign * dp) * dphi * r), mu)
    damp = 2.0 / params.c2 * integrate(ScalarField(g, (dphi + sign * dp) ** 2 * r), mu)
    hess = hessian_quadratic_form(rho, phi, PotentialSpec.renyi(gamma), mu)
    return first, damp - 2 * sign * hess, hess


def criterion_7() -> CriterionResult:
    out = {}
    # +Ent system: H decreases at rate K, and the first Lagrangian rate
    grid, mu, rho0 = _torus_data(128)
    params = ModelParams(GAMMA, 1.0, 1, 1.0, potential_sign=1)
    tr = langevin_solve(rho0, 0.2 * np.cos(grid.nodes), params, mu,
                        SolverConfig(dt=1e-3, t_end=1.0, diagnostic_stride=10))
    t = tr.time_array
    HL = np.array([hamiltonian_lagrangian(r, p, params, mu) for r, p in zip(tr.rhos, tr.phis)])
    K = np.array([kinetic_energy(r, p, mu) for r, p in zip(tr.rhos, tr.phis)])
    inner = interior_mask(t.size)
    dH = time_derivative(HL[:, 0], t)
    dL = time_derivative(HL[:, 1], t)
    dL_formula = np.array([lagrangian_rates(r, p, params, mu)[0] for r, p in zip(tr.rhos, tr.phis)])
    out["dH_vs_-K"] = float(np.max(np.abs(dH + K)[inner] / np.abs(K[inner])))
    out["H_max_increase"] = float(np.max(np.diff(HL[:, 0])))
    out["dL_vs_formula(+Ent)"] = float(np.max(np.abs(dL - dL_formula)[inner] / np.abs(dL_formula[inner])))

    # -Ent system with f = 0: convexity of L and the second-rate formula
    grid, mu, rho0 = _torus_data(64)
    params = ModelParams(GAMMA, 1.0, 1, 1.0, potential_sign=-1)
    tr = langevin_solve(rho0, 0.2 * np.cos(grid.nodes), params, mu,
                        SolverConfig(dt=1e-3, t_end=0.4, diagnostic_stride=10, dealias=True))
    t = tr.time_array
    L = np.array([hamiltonian_lagrangian(r, p, params, mu)[1] for r, p in zip(tr.rhos, tr.phis)])
    rates = [lagrangian_rates(r, p, params, mu) for r, p in zip(tr.rhos, tr.phis)]
    d2L_formula = np.array([x[1] for x in rates])
    inner = interior_mask(t.size)
    d2L = time_derivative(L, t, deriv=2)
    out["L_min_second_difference"] = float(np.min(np.diff(L, 2)))
    out["d2L_vs_formula(-Ent)"] = float(np.max(np.abs(d2L - d2L_formula)[inner] / np.abs(d2L_formula[inner])))
    # the same damping term written with grad phi + grad p, for the record
    alt = []
    for r, p, x in zip(tr.rhos, tr.phis, rates):
        dphi = gradient(p).values
        dp = gradient(ScalarField(r.grid, 2.0 * r.values)).values
        alt.append(2.0 / params.c2 * integrate(ScalarField(r.grid, (dphi + dp) ** 2 * r.values), mu) + 2 * x[2])
    alt = np.array(alt)
    out["d2L_vs_plus_sign_variant"] = float(np.max(np.abs(d2L - alt)[inner] / np.abs(alt[inner])))
    ok = (out["dH_vs_-K"] <= 0.01 and out["H_max_increase"] <= 0.0 and out["dL_vs_formula(+Ent)"] <= 0.01
          and out["L_min_second_difference"] >= -1e-8 and out["d2L_vs_formula(-Ent)"] <= 0.03)
    return CriterionResult(7, "Hamiltonian and Lagrangian", ok, out)


# ---------------------------------------------------------------- 8-10: free boundary and c sweeps


def criterion_8() -> CriterionResult:
    prof = barenblatt_build(GAMMA, 1.0)
    errs, offsets = [], []
    for points in (256, 512, 1024):
        grid = Grid.radial(points, 3.5, 1)
        mu = WeightedMeasure.zero(grid)
        r1, _ = reference_state(grid, 1.0, prof, c=0.0)
        r2, _ = reference_state(grid, 2.0, prof, c=0.0)
        dt = 0.4 * grid.h ** 2 / (GAMMA * float(np.max(r1.values)))
        tr = pme_solve(r1.values, GAMMA, mu, SolverConfig(dt=dt, t_end=2.0, diagnostic_stride=10 ** 9), t0=1.0)
        cells = RadialCells(grid, mu)
        errs.append(float(np.dot(cells.volume, np.abs(tr.final_rho - r2.values))))
        front = support_radius_estimate(grid, tr.final_rho, gamma=GAMMA)
        offsets.append(abs(front - math.sqrt(6 * prof.lam) * 2.0 ** prof.k) / grid.h)
    orders = [math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])]
    ok = errs[-1] <= 5e-3 and min(orders) >= 1.0 and offsets[-1] <= 2.0
    return CriterionResult(8, "porous medium flow vs Barenblatt", ok, {
        "L1_error_1024": errs[-1], "orders": orders, "support_offset_cells": offsets[-1]})


def criterion_9(jobs: int = 1) -> CriterionResult:
    from .experiments.studies import converge_c_to_zero, default_sweep_config

    res = converge_c_to_zero(default_sweep_config(**{"init.phi": "pressure"}), (0.4, 0.2, 0.1), jobs=jobs)
    ok = res.verdicts["l1_strictly_decreasing"] and res.verdicts["l1_order_in_range"]
    return CriterionResult(9, "c -> 0 sweep", ok, {
        "sup_L1": res.metrics["sup_l1"], "order": res.order, "order_halfwidth": res.order_halfwidth})


def criterion_10(jobs: int = 1) -> CriterionResult:
    from .experiments.studies import converge_c_to_infinity, default_sweep_config

    cfg = default_sweep_config(**{"init.phi": "cosine", "init.phi_amplitude": 0.3})
    res = converge_c_to_infinity(cfg, (2.0, 4.0, 8.0), jobs=jobs)
    ok = res.verdicts["l2_velocity_strictly_decreasing"] and res.verdicts["kinetic_drift_below_1pct"]
    return CriterionResult(10, "c -> inf sweep", ok, {
        "sup_L2_velocity": res.metrics["sup_l2_velocity"], "sup_W2": res.metrics["sup_w2"],
        "kinetic_drift": res.metrics["geodesic_kinetic_drift"][0]})


# ---------------------------------------------------------------- 11: property suites


def _random_trig(rng, x, length, modes=4, scale=1.0, even=False):
    out = np.zeros_like(x)
    for j in range(1, modes + 1):
        w = (math.pi if even else 2 * math.pi) * j / length
        out += scale * rng.normal() / j ** 2 * np.cos(w * x)
        if not even:
            out += scale * rng.normal() / j ** 2 * np.sin(w * x)
    return out


def _random_density(rng, grid, mu, even=False):
    v = _random_trig(rng, grid.nodes, grid.length, even=even)
    rho = 1.0 + 0.5 * v / max(1e-12, float(np.max(np.abs(v))))
    return rho / integrate(ScalarField(grid, rho), mu)


def property_suites(seed: int = 0, trials: int = 50) -> Dict[str, float]:
    """Worst violations of the four property families over randomized states."""
    rng = np.random.default_rng(seed)
    grid = Grid.periodic(64)
    mu = WeightedMeasure.cosine(grid, 0.5)
    ibp, adj, fisher_gap, rel_min = 0.0, 0.0, 0.0, math.inf
    for _ in range(trials):
        u = ScalarField(grid, _random_trig(rng, grid.nodes, grid.length))
        v = ScalarField(grid, _random_trig(rng, grid.nodes, grid.length))
        lhs = integrate(ScalarField(grid, witten_laplacian(u, mu).values * v.values), mu)
        rhs = -integrate(ScalarField(grid, gradient(u).values * gradient(v).values), mu)
        ibp = max(ibp, abs(lhs - rhs) / max(abs(rhs), 1e-12))
        X = ScalarField(grid, _random_trig(rng, grid.nodes, grid.length))
        a = integrate(ScalarField(grid, X.values * gradient(v).values), mu)
        b = integrate(ScalarField(grid, weighted_divergence_adjoint(X, mu).values * v.values), mu)
        adj = max(adj, abs(a - b) / max(abs(a), 1e-12))
        rho = DensityField(grid, _random_density(rng, grid, mu))
        p_form, direct = fisher_information_forms(rho, GAMMA, mu)
        fisher_gap = max(fisher_gap, abs(p_form - direct) / abs(direct))
        rho_b = DensityField(grid, _random_density(rng, grid, mu))
        try:
            rel_min = min(rel_min, relative_entropy(rho, rho_b, GAMMA, mu))
        except NumericalConsistencyError:
            rel_min = -math.inf

    # CD inequality: Hess_Ent >= K int P |grad phi|^2 with K = min Ric_{m,n}
    cd_worst = 0.0
    pot = PotentialSpec.renyi(GAMMA)
    cases = [
        (WeightedMeasure.zero(grid), ModelParams(GAMMA, 1.0, 1, 0.0), False),
        (WeightedMeasure.quadratic(Grid.radial(256, 1.0, 1), 1.0), ModelParams(GAMMA, 3.0, 1, 0.0), True),
    ]
    for i in range(trials):
        measure, params, even = cases[i % 2]
        g = measure.grid
        K = float(np.min(bakry_emery_curvature(measure, params).values))
        rho = DensityField(g, _random_density(rng, g, measure, even=even))
        phi = PotentialField(g, _random_trig(rng, g.nodes, g.length, even=even))
        hess = hessian_quadratic_form(rho, phi, pot, measure)
        bound = K * integrate(ScalarField(g, pot.P(rho.values) * gradient(phi).values ** 2), measure)
        scale = max(abs(hess), abs(bound), 1e-12)
        cd_worst = min(cd_worst, (hess - bound) / scale)
    return {"ibp_rel": ibp, "adjoint_rel": adj, "fisher_dual_rel": fisher_gap,
            "min_relative_entropy": rel_min, "cd_worst_rel": cd_worst}


def criterion_11(seed: int = 0) -> CriterionResult:
    m = property_suites(seed)
    ok = (m["ibp_rel"] <= 1e-8 and m["adjoint_rel"] <= 1e-8 and m["fisher_dual_rel"] <= 1e-10
          and m["min_relative_entropy"] >= 0.0 and m["cd_worst_rel"] >= -1e-10)
    return CriterionResult(11, "property suites", ok, m)


# ---------------------------------------------------------------- 12: determinism


def criterion_12() -> CriterionResult:
    from .experiments.config import ScenarioConfig
    from .experiments.scenario import run_scenario

    cfg = ScenarioConfig.from_flat({"grid.points": 64, "model.c": 1.0, "init.phi": "cosine",
                                    "time.delta": 1.0, "time.t_end": 1.5, "time.dt": 1e-3,
                                    "time.diagnostic_stride": 20})
    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            res = run_scenario(cfg, Path(tmp) / f"run{i}.csv")
            digests.append(hashlib.sha256(res.csv_path.read_bytes()).hexdigest())
    return CriterionResult(12, "determinism", digests[0] == digests[1], {"sha256": digests[0][:16],
                                                                        "identical": digests[0] == digests[1]})


# ---------------------------------------------------------------- driver


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
}


def run_criterion(number: int, seed: int = 0, jobs: int = 1) -> CriterionResult:
    fn = CRITERIA[number]
    started = time.perf_counter()
    if number == 11:
        res = fn(seed=seed)
    elif number in (9, 10):
        res = fn(jobs=jobs)
    else:
        res = fn()
    res.seconds = time.perf_counter() - started
    return res


def run_acceptance(numbers: Optional[Iterable[int]] = None, seed: int = 0, jobs: int = 1,
                   echo: Optional[Callable[[str], None]] = print) -> List[CriterionResult]:
    results = []
    for n in (numbers or sorted(CRITERIA)):
        res = run_criterion(int(n), seed=seed, jobs=jobs)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
