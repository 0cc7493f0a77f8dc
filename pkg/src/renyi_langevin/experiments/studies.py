"""Parameter sweeps in c toward the two limiting flows."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from ..errors import ConfigurationError, SolverError
from ..fields import C_INF, Regime, ScalarField, gradient, integrate, parse_speed, wasserstein2_1d
from ..functionals import kinetic_energy, relative_entropy
from ..solvers import HyperbolicState, Trajectory, solve
from .config import ScenarioConfig
from .scenario import build_initial_data


@dataclass
class StudyResult:
    study: str
    sweep: List[object]
    metrics: Dict[str, List[float]]
    order: float = math.nan
    order_halfwidth: float = math.nan
    horizon: float = math.nan
    verdicts: Dict[str, bool] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(self.verdicts.values())

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["sweep"] = ["inf" if s is C_INF or s == math.inf else s for s in self.sweep]
        doc["passed"] = self.passed
        return doc


def fit_order(params: Sequence[float], errors: Sequence[float]):
    """Log-log slope of error against parameter and its 95% half-width."""
    x = np.log(np.asarray(params, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    if x.size < 3:
        raise ConfigurationError("an order fit needs at least 3 sweep points")
    fit = stats.linregress(x, y)
    half = stats.t.ppf(0.975, x.size - 2) * fit.stderr
    return float(fit.slope), float(half)


def _run(cfg: ScenarioConfig, c) -> Trajectory:
    """Integrate the base config with model.c replaced; a failed run returns its partial samples."""
    run_cfg = cfg.with_overrides([f"model.c={c}"])
    init = build_initial_data(run_cfg)
    try:
        return solve(init.rho, init.phi, init.params, init.measure, run_cfg.solver_config(), t0=init.t0)
    except SolverError as exc:
        if exc.trajectory is None:
            raise
        return exc.trajectory


def _sweep(cfg: ScenarioConfig, speeds: Sequence, jobs: int) -> List[Trajectory]:
    """Runs in parallel up to ``jobs``; results come back in sweep order."""
    if jobs <= 1 or len(speeds) <= 1:
        return [_run(cfg, c) for c in speeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run, [cfg] * len(speeds), speeds))


def _horizon(trajs: Sequence[Trajectory], t_end: float, notes: List[str]) -> float:
    """Common horizon: t_end, or half the earliest failure time across the sweep."""
    fails = [tr.error.time for tr in trajs if tr.error is not None and tr.error.time is not None]
    if not fails:
        return t_end
    first = min(fails)
    notes.append(f"earliest solver failure at t = {first!r}; horizon set to half of it")
    return trajs[0].times[0] + 0.5 * (first - trajs[0].times[0])


def _aligned(a: Trajectory, b: Trajectory, horizon: float):
    """Pairs of sample indices at equal times up to the horizon."""
    n = min(len(a), len(b))
    for i in range(n):
        if abs(a.times[i] - b.times[i]) > 1e-9 * max(1.0, abs(a.times[i])):
            raise ConfigurationError("sweep runs were sampled at different times (use a common dt)")
        if a.times[i] <= horizon + 1e-12:
            yield i


def _check_common(cfg: ScenarioConfig):
    if not cfg.grid_obj().is_periodic:
        raise ConfigurationError("grid.kind: the c sweeps run on the periodic grid")


def converge_c_to_zero(cfg: ScenarioConfig, c_list: Sequence[float] = (0.4, 0.2, 0.1), jobs: int = 1) -> StudyResult:
    """Distance of the Langevin flow from the porous medium flow as c decreases.

    The initial potential should be the gradient-flow one (init.phi = pressure)
    so that the data are well prepared for every c.
    """
    _check_common(cfg)
    speeds = [float(c) for c in c_list]
    if any(c < 0 for c in speeds) or any(b >= a for a, b in zip(speeds, speeds[1:])):
        raise ConfigurationError("c_list must be nonnegative and decreasing")
    notes: List[str] = []
    ref, *runs = _sweep(cfg, [0.0] + speeds, jobs)
    mu = cfg.measure()
    gamma = cfg.model.gamma
    horizon = _horizon([ref] + runs, cfg.time.t_end, notes)
    l1, rel = [], []
    for c, tr in zip(speeds, runs):
        d_l1, d_rel = 0.0, 0.0
        for i in _aligned(tr, ref, horizon):
            a, b = tr.rhos[i], ref.rhos[i]
            d_l1 = max(d_l1, integrate(ScalarField(a.grid, np.abs(a.values - b.values)), mu))
            dv = gradient(tr.phis[i]).values - gradient(ref.phis[i]).values
            kin = integrate(ScalarField(a.grid, a.values * dv * dv), mu)
            d_rel = max(d_rel, relative_entropy(a, b, gamma, mu) + 0.5 * c * c * kin)
        l1.append(d_l1)
        rel.append(d_rel)
    res = StudyResult("converge-zero", speeds, {"sup_l1": l1, "sup_relative_entropy": rel}, horizon=horizon,
                      notes=notes)
    positive = [(c, e) for c, e in zip(speeds, l1) if c > 0]
    if len(positive) >= 3:
        res.order, res.order_halfwidth = fit_order(*zip(*positive))
        res.verdicts["l1_order_in_range"] = 1.5 <= res.order <= 2.5
    res.verdicts["l1_strictly_decreasing"] = all(b < a for a, b in zip(l1, l1[1:]))
    if 0.0 in speeds:
        res.verdicts["zero_entry_vanishes"] = l1[speeds.index(0.0)] == 0.0
    return res


def _h1_norm(rho, phi, gamma, c) -> float:
    """Discrete H^1 norm of (p, u), p = (rho^{gamma-1} - 1)/(gamma-1), u = phi'."""
    grid = rho.grid
    st = HyperbolicState.from_density(grid, rho.values, gradient(phi).values, gamma, c)
    dp = gradient(ScalarField(grid, st.p)).values
    du = gradient(ScalarField(grid, st.u)).values
    return math.sqrt(grid.h * float(np.sum(st.p ** 2 + dp ** 2 + st.u ** 2 + du ** 2)))


def converge_c_to_infinity(cfg: ScenarioConfig, c_list: Sequence = (2.0, 4.0, 8.0), jobs: int = 1,
                           h1_ratio_bound: float = 2.0) -> StudyResult:
    """Distance of the Langevin flow from the geodesic flow as c grows."""
    _check_common(cfg)
    speeds = [parse_speed(c) for c in c_list]
    finite = [c for c in speeds if c is not C_INF]
    if any(c <= 0 for c in finite) or any(b <= a for a, b in zip(finite, finite[1:])):
        raise ConfigurationError("c_list must be positive and increasing")
    notes: List[str] = []
    labels = ["inf" if c is C_INF else c for c in speeds]
    ref, *runs = _sweep(cfg, ["inf"] + labels, jobs)
    mu = cfg.measure()
    gamma = cfg.model.gamma
    horizon = _horizon([ref] + runs, cfg.time.t_end, notes)
    if ref.error is not None:
        notes.append(f"geodesic run stopped: {ref.error}")
    vel, w2, h1 = [], [], []
    for c, tr in zip(speeds, runs):
        d_vel, d_w2, norm = 0.0, 0.0, 0.0
        c_h1 = 1.0 if c is C_INF else c
        for i in _aligned(tr, ref, horizon):
            dv = gradient(tr.phis[i]).values - gradient(ref.phis[i]).values
            d_vel = max(d_vel, math.sqrt(tr.grid.h * float(np.sum(dv * dv))))
            d_w2 = max(d_w2, wasserstein2_1d(tr.rhos[i], ref.rhos[i], mu))
            norm = max(norm, _h1_norm(tr.rhos[i], tr.phis[i], gamma, c_h1))
        vel.append(d_vel)
        w2.append(d_w2)
        h1.append(norm)
    kin = [kinetic_energy(r, p, mu) for r, p, t in zip(ref.rhos, ref.phis, ref.times) if t <= horizon + 1e-12]
    drift = (max(kin) - min(kin)) / kin[0] if kin and kin[0] > 0 else 0.0
    res = StudyResult("converge-inf", labels,
                      {"sup_l2_velocity": vel, "sup_w2": w2, "sup_h1": h1, "geodesic_kinetic_drift": [drift]},
                      horizon=horizon, notes=notes)
    fin_vel = [v for c, v in zip(speeds, vel) if c is not C_INF]
    fin_w2 = [v for c, v in zip(speeds, w2) if c is not C_INF]
    res.verdicts["l2_velocity_strictly_decreasing"] = all(b < a for a, b in zip(fin_vel, fin_vel[1:]))
    res.verdicts["w2_strictly_decreasing"] = all(b < a for a, b in zip(fin_w2, fin_w2[1:]))
    res.verdicts["kinetic_drift_below_1pct"] = drift <= 0.01
    res.verdicts["h1_uniformly_bounded"] = bool(h1) and max(h1) <= h1_ratio_bound * min(h1)
    if C_INF in speeds:
        res.verdicts["inf_entry_vanishes"] = vel[speeds.index(C_INF)] == 0.0
    if len(finite) >= 3:
        res.order, res.order_halfwidth = fit_order([1.0 / c for c in finite], fin_vel)
    return res


def default_sweep_config(**overrides) -> ScenarioConfig:
    """Torus of 128 points, rho0 proportional to 1 + 0.3 sin x, t in [0, 1]."""
    items = {"grid.points": 128, "init.amplitude": 0.3, "time.t_end": 1.0, "time.dt": 1e-3,
             "time.diagnostic_stride": 10}
    items.update(overrides)
    return ScenarioConfig.from_flat(items)
