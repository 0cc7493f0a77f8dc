"""Scenario runs: build initial data, integrate, write diagnostics CSV plus JSON sidecar."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, RenyiLangevinError, SolverError
from ..fields import (
    DensityField,
    Grid,
    ModelParams,
    PotentialField,
    Regime,
    ScalarField,
    WeightedMeasure,
    integrate,
)
from ..functionals import (
    DiagnosticsRecord,
    entropy_time_derivative,
    fisher_information_forms,
    hamiltonian_lagrangian,
    kinetic_energy,
    renyi_entropy,
    second_moment,
)
from ..reference import BarenblattProfile, barenblatt_build, beta1_solve, reference_state, scaling_ode_solve
from ..solvers import solve, support_radius_estimate
from ..wentropy import MIN_STENCIL, WEntropyCoefficients, coefficients_build, w_series
from .config import InitPreset, PhiPreset, ScenarioConfig

log = logging.getLogger(__name__)

CSV_COLUMNS = DiagnosticsRecord.columns()


@dataclass
class InitialData:
    grid: Grid
    measure: WeightedMeasure
    params: ModelParams
    rho: np.ndarray
    phi: np.ndarray
    t0: float
    profile: Optional[BarenblattProfile] = None
    scaling: object = None


@dataclass
class ScenarioResult:
    csv_path: Optional[Path]
    sidecar_path: Optional[Path]
    records: List[DiagnosticsRecord] = field(default_factory=list)
    error: Optional[Exception] = None
    w_status: str = ""

    @property
    def ok(self) -> bool:
        return self.error is None


# ---------------------------------------------------------------- initial data


def _pressure(rho, gamma):
    return gamma * np.maximum(rho, 0.0) ** (gamma - 1.0) / (gamma - 1.0)


def _read_initial_csv(path: Union[str, Path], grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.points, 3):
        raise ConfigurationError(f"init.path: expected {grid.points} rows of x, rho, phi")
    if np.max(np.abs(data[:, 0] - grid.nodes)) > 1e-9 * grid.length:
        raise ConfigurationError("init.path: x column does not match the grid nodes")
    return data[:, 1].copy(), data[:, 2].copy()


def scaling_for(cfg: ScenarioConfig, params: ModelParams):
    """Scale-factor path (with beta1) on [delta, t_end] for finite c, else None."""
    if params.regime is not Regime.LANGEVIN:
        return None
    s = cfg.scaling
    profile = barenblatt_build(params.gamma, params.m)
    path = scaling_ode_solve(params.c, params.k, s.u_delta, s.u_prime_delta, [cfg.time.delta, cfg.time.t_end])
    return beta1_solve(path, profile.lam, params.gamma, params.m)


def build_initial_data(cfg: ScenarioConfig) -> InitialData:
    params = cfg.model_params()
    grid = cfg.grid_obj()
    mu = cfg.measure()
    t0 = cfg.time.delta
    preset = InitPreset(cfg.init.preset)
    profile = None
    scaling = None
    ref_phi = None
    if preset is InitPreset.BARENBLATT:
        if grid.is_periodic:
            raise ConfigurationError("init.preset: barenblatt needs a radial grid")
        if not t0 > 0:
            raise ConfigurationError("time.delta: barenblatt data need delta > 0")
        profile = barenblatt_build(params.gamma, params.m)
        scaling = scaling_for(cfg, params)
        rho_f, phi_f = reference_state(grid, t0, profile, scaling=scaling, c=params.c)
        rho, ref_phi = rho_f.values.copy(), phi_f.values.copy()
    elif preset is InitPreset.UNIFORM_PERTURBED:
        x = grid.nodes
        wave = (np.sin(2 * math.pi * cfg.init.mode * x / grid.length) if grid.is_periodic
                else np.cos(math.pi * cfg.init.mode * x / grid.length))
        rho = 1.0 + cfg.init.amplitude * wave
        rho = rho / integrate(ScalarField(grid, rho), mu)
    else:
        rho, ref_phi = _read_initial_csv(cfg.init.path, grid)
    phi_preset = PhiPreset(cfg.init.phi)
    if phi_preset is PhiPreset.PRESSURE:
        phi = -_pressure(rho, params.gamma)
    elif phi_preset is PhiPreset.COSINE:
        phi = cfg.init.phi_amplitude * np.cos(2 * math.pi * cfg.init.mode * grid.nodes / grid.length)
    elif phi_preset is PhiPreset.ZERO:
        phi = np.zeros(grid.points)
    else:
        if ref_phi is None:
            raise ConfigurationError("init.phi: reference potential needs barenblatt or file data")
        phi = ref_phi
    if preset is InitPreset.FILE and phi_preset is not PhiPreset.REFERENCE:
        log.info("init.phi = %s replaces the potential column of %s", phi_preset.value, cfg.init.path)
    if profile is None and params.m >= 1:
        profile = barenblatt_build(params.gamma, params.m)
    if scaling is None and profile is not None and params.regime is Regime.LANGEVIN and t0 > 0:
        scaling = scaling_for(cfg, params)
    return InitialData(grid, mu, params, rho, phi, t0, profile, scaling)


# ---------------------------------------------------------------- diagnostics


def _with_support(grid: Grid, rho: np.ndarray, phi: np.ndarray, gamma: float, support=None):
    if grid.is_periodic:
        return DensityField(grid, rho), PotentialField(grid, phi)
    if support is None:
        support = min(support_radius_estimate(grid, rho, gamma=gamma), grid.length)
    return (DensityField(grid, rho, support_radius=support),
            PotentialField(grid, phi, support_radius=support))


def _safe(fn, *args, **kw) -> float:
    try:
        return float(fn(*args, **kw))
    except RenyiLangevinError:
        return math.nan


def coefficients_for(cfg: ScenarioConfig, params: ModelParams, scaling) -> WEntropyCoefficients:
    s = cfg.scaling
    if params.regime is Regime.LANGEVIN:
        return coefficients_build(params, scaling, b_delta=s.b_delta, b_prime_delta=s.b_prime_delta)
    return coefficients_build(params, interval=[cfg.time.delta, cfg.time.t_end])


def diagnostics_table(times: Sequence[float], rhos: Sequence[DensityField], phis: Sequence[ScalarField],
                      params: ModelParams, mu: WeightedMeasure, profile: Optional[BarenblattProfile],
                      coeffs: Optional[WEntropyCoefficients]) -> Tuple[List[DiagnosticsRecord], str]:
    """One record per sample; W columns are filled when the reference family is available."""
    gamma = params.gamma
    recs = []
    for t, rho, phi in zip(times, rhos, phis):
        p_form, direct = fisher_information_forms(rho, gamma, mu)
        if params.regime is Regime.LANGEVIN:
            ham, lag = hamiltonian_lagrangian(rho, phi, params, mu)
        else:
            ham, lag = math.nan, math.nan
        recs.append(DiagnosticsRecord(
            t=float(t),
            mass=integrate(rho, mu, rho.support_radius),
            ent_gamma=renyi_entropy(rho, gamma, mu),
            dent_dt=entropy_time_derivative(rho, phi, gamma, mu, check=False),
            fisher=direct,
            grad_ent_norm_sq=p_form,
            second_moment=math.nan if rho.grid.is_periodic else second_moment(rho, mu),
            kinetic=kinetic_energy(rho, phi, mu),
            hamiltonian=ham,
            lagrangian=lag,
            bochner_rhs=math.nan,
        ))
    status = "computed"
    if profile is None or coeffs is None:
        status = "skipped: no reference family for these parameters"
    elif len(recs) < MIN_STENCIL:
        status = f"skipped: fewer than {MIN_STENCIL} diagnostic samples"
    else:
        try:
            ser = w_series(np.asarray(times, dtype=float), rhos, phis, params, mu, coeffs, profile)
        except (RenyiLangevinError, ValueError) as exc:
            status = f"skipped: {exc}"
        else:
            for i, rec in enumerate(recs):
                rec.bochner_rhs = float(ser.bochner[i])
                rec.H_cm = float(ser.H[i])
                rec.W_cm = float(ser.W[i])
                rec.I_cm = float(ser.I[i])
                rec.lhs_w_formula = float(ser.lhs[i])
                rec.residual = float(ser.lhs[i] - ser.rhs[i])
    return recs, status


# ---------------------------------------------------------------- output


def write_csv(path: Union[str, Path], records: Sequence[DiagnosticsRecord]):
    """Fixed column order, shortest round-trip decimal for every value."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow([repr(v) for v in rec.as_tuple()])


def read_csv(path: Union[str, Path]) -> dict:
    """Column name -> float array."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigurationError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body], dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def sidecar_path_for(csv_path: Union[str, Path]) -> Path:
    return Path(csv_path).with_suffix(".json")


def _write_sidecar(path: Path, cfg: ScenarioConfig, meta: dict):
    doc = {"config": cfg.to_flat()}
    doc.update(meta)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _error_info(exc: Optional[Exception]):
    if exc is None:
        return None
    return {"type": type(exc).__name__, "message": str(exc), "time": getattr(exc, "time", None),
            "suggested_dt": getattr(exc, "suggested_dt", None)}


# ---------------------------------------------------------------- entry points


def run_scenario(cfg: ScenarioConfig, out: Optional[Union[str, Path]] = None) -> ScenarioResult:
    """Integrate the configured flow and write the diagnostics file.

    Solver failures keep the samples gathered so far; the error is recorded
    in the sidecar and returned in the result.
    """
    cfg.validate()
    csv_path = Path(out or cfg.output.path)
    init = build_initial_data(cfg)
    params = init.params
    started = time.perf_counter()
    error = None
    try:
        traj = solve(init.rho, init.phi, params, init.measure, cfg.solver_config(), t0=init.t0)
    except SolverError as exc:
        if exc.trajectory is None:
            raise
        traj, error = exc.trajectory, exc
        log.warning("solver stopped early: %s", exc)
    wall = time.perf_counter() - started
    rhos, phis = [], []
    for r, p in zip(traj.rhos, traj.phis):
        rf, pf = _with_support(init.grid, r.values, p.values, params.gamma)
        rhos.append(rf)
        phis.append(pf)
    coeffs = None
    if init.profile is not None and init.t0 > 0:
        try:
            coeffs = coefficients_for(cfg, params, init.scaling)
        except RenyiLangevinError as exc:
            log.info("W-entropy coefficients unavailable: %s", exc)
    records, status = diagnostics_table(traj.times, rhos, phis, params, init.measure, init.profile, coeffs)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(csv_path, records)
    side = sidecar_path_for(csv_path)
    _write_sidecar(side, cfg, {
        "kind": "simulate",
        "scheme": {"name": cfg.solver.scheme if init.grid.is_periodic else "finite-volume",
                   "system": traj.system, "dt_effective": traj.dt, "steps": traj.steps,
                   "grid": init.grid.kind.value, "points": init.grid.points},
        "wall_clock_s": wall,
        "rows": len(records),
        "w_columns": status,
        "error": _error_info(error),
    })
    return ScenarioResult(csv_path, side, records, error, status)


def run_reference(cfg: ScenarioConfig, out: Optional[Union[str, Path]] = None) -> ScenarioResult:
    """Sample the exact reference solution at the diagnostic times (no integrator)."""
    cfg.validate()
    params = cfg.model_params()
    grid = cfg.grid_obj()
    mu = cfg.measure()
    if grid.is_periodic:
        raise ConfigurationError("grid.kind: reference runs need a radial grid")
    if not mu.is_flat:
        raise ConfigurationError("weight.preset: reference solutions are Euclidean (use zero)")
    if not cfg.time.delta > 0:
        raise ConfigurationError("time.delta: reference runs need delta > 0")
    profile = barenblatt_build(params.gamma, params.m)
    scaling = scaling_for(cfg, params)
    nsteps, dt = cfg.solver_config().step_plan(cfg.time.delta)
    stride = cfg.time.diagnostic_stride
    times = cfg.time.delta + dt * np.arange(0, nsteps + 1, stride)
    rhos, phis = [], []
    for t in times:
        r, p = reference_state(grid, float(t), profile, scaling=scaling, c=params.c)
        rhos.append(r)
        phis.append(p)
    coeffs = coefficients_for(cfg, params, scaling)
    records, status = diagnostics_table(times, rhos, phis, params, mu, profile, coeffs)
    csv_path = Path(out or cfg.output.path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(csv_path, records)
    side = sidecar_path_for(csv_path)
    _write_sidecar(side, cfg, {"kind": "reference", "scheme": {"name": "exact"}, "rows": len(records),
                               "w_columns": status, "error": None})
    return ScenarioResult(csv_path, side, records, None, status)
