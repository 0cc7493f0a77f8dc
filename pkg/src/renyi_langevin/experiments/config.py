"""Scenario configuration: a flat `section.key = value` text format.

Every key has a default; unknown keys and malformed values are rejected with
the offending key path.  A config converts to and from a flat dict, which is
what the JSON sidecar stores.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Union

from ..errors import ConfigurationError, RenyiLangevinError
from ..fields import C_INF, Grid, GridKind, ModelParams, WeightedMeasure, parse_speed
from ..solvers.common import Scheme, SolverConfig


class WeightPreset(str, enum.Enum):
    ZERO = "zero"
    COSINE = "cosine"
    QUADRATIC = "quadratic"


class InitPreset(str, enum.Enum):
    BARENBLATT = "barenblatt"
    UNIFORM_PERTURBED = "uniform-perturbed"
    FILE = "file"


class PhiPreset(str, enum.Enum):
    # phi = -gamma rho^{gamma-1}/(gamma-1), the gradient-flow potential
    PRESSURE = "pressure"
    COSINE = "cosine"
    ZERO = "zero"
    # taken from the reference model (barenblatt only)
    REFERENCE = "reference"


@dataclass
class ModelSection:
    gamma: float = 2.0
    m: float = 1.0
    n: int = 1
    c: Union[float, str] = 1.0
    potential_sign: int = 1


@dataclass
class GridSection:
    kind: str = "periodic-1d"
    points: int = 128
    length: float = 2 * math.pi
    ambient_dim: int = 1


@dataclass
class WeightSection:
    preset: str = "zero"
    amplitude: float = 0.0


@dataclass
class InitSection:
    preset: str = "uniform-perturbed"
    mode: int = 1
    amplitude: float = 0.3
    phi: str = "pressure"
    phi_amplitude: float = 0.1
    path: str = ""


@dataclass
class TimeSection:
    delta: float = 0.0
    t_end: float = 1.0
    dt: float = 1e-3
    diagnostic_stride: int = 10


@dataclass
class SolverSection:
    scheme: str = "spectral-rk4"
    cfl: float = 0.9
    density_floor: float = 0.0
    dealias: bool = False


@dataclass
class OutputSection:
    path: str = "diagnostics.csv"
    format: str = "csv"


@dataclass
class ScalingSection:
    """Initial data for the scale factor u and the W-entropy coefficient b."""

    u_delta: float = 1.0
    u_prime_delta: float = 1.0 / 3.0
    b_delta: float = 1.0
    b_prime_delta: float = 0.0


SECTIONS = {
    "model": ModelSection,
    "grid": GridSection,
    "weight": WeightSection,
    "init": InitSection,
    "time": TimeSection,
    "solver": SolverSection,
    "output": OutputSection,
    "scaling": ScalingSection,
}


def _coerce(raw: Any, target: Any, key: str):
    """Convert a raw value to the type of the section default."""
    try:
        if isinstance(target, bool):
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("true", "1", "yes", "on"):
                return True
            if text in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(target, int):
            val = float(raw)
            if not val.is_integer():
                raise ValueError(raw)
            return int(val)
        if isinstance(target, float):
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key}: cannot read {raw!r} as {type(target).__name__}") from None


@dataclass
class ScenarioConfig:
    model: ModelSection = field(default_factory=ModelSection)
    grid: GridSection = field(default_factory=GridSection)
    weight: WeightSection = field(default_factory=WeightSection)
    init: InitSection = field(default_factory=InitSection)
    time: TimeSection = field(default_factory=TimeSection)
    solver: SolverSection = field(default_factory=SolverSection)
    output: OutputSection = field(default_factory=OutputSection)
    scaling: ScalingSection = field(default_factory=ScalingSection)

    # ------------------------------------------------------------ conversion

    def to_flat(self) -> Dict[str, Any]:
        out = {}
        for name in SECTIONS:
            sec = getattr(self, name)
            for f in fields(sec):
                v = getattr(sec, f.name)
                if isinstance(v, float) and math.isinf(v):
                    v = "inf"
                out[f"{name}.{f.name}"] = v
        return out

    @classmethod
    def from_flat(cls, items: Mapping[str, Any], base: Optional["ScenarioConfig"] = None) -> "ScenarioConfig":
        cfg = base.copy() if base is not None else cls()
        for key, raw in items.items():
            cfg._set(key, raw)
        cfg.validate()
        return cfg

    def copy(self) -> "ScenarioConfig":
        return ScenarioConfig(**{name: replace(getattr(self, name)) for name in SECTIONS})

    def _set(self, key: str, raw: Any):
        parts = key.strip().split(".")
        if len(parts) != 2 or parts[0] not in SECTIONS:
            raise ConfigurationError(f"{key}: unknown key")
        sec = getattr(self, parts[0])
        names = {f.name for f in fields(sec)}
        if parts[1] not in names:
            raise ConfigurationError(f"{key}: unknown key")
        default = getattr(SECTIONS[parts[0]](), parts[1])
        if key == "model.c":
            try:
                c = parse_speed(raw if not isinstance(raw, str) else raw.strip())
            except (RenyiLangevinError, ValueError) as exc:
                raise ConfigurationError(f"{key}: {exc}") from None
            setattr(sec, parts[1], "inf" if c is C_INF else float(c))
            return
        setattr(sec, parts[1], _coerce(raw, default, key))

    def with_overrides(self, overrides: Iterable[str]) -> "ScenarioConfig":
        items = {}
        for item in overrides:
            if "=" not in item:
                raise ConfigurationError(f"override {item!r} is not of the form key=value")
            k, v = item.split("=", 1)
            items[k.strip()] = v.strip()
        return ScenarioConfig.from_flat(items, base=self)

    # ------------------------------------------------------------ validation

    def validate(self):
        """Re-check every constraint by building the runtime objects."""
        self.model_params()
        self.grid_obj()
        self.measure()
        self.solver_config()
        for key, enum_type in (("weight.preset", WeightPreset), ("init.preset", InitPreset),
                               ("init.phi", PhiPreset)):
            sec, name = key.split(".")
            try:
                enum_type(getattr(getattr(self, sec), name))
            except ValueError:
                raise ConfigurationError(f"{key}: unknown value {getattr(getattr(self, sec), name)!r}") from None
        if self.output.format != "csv":
            raise ConfigurationError("output.format: only csv is supported")
        if self.init.preset == InitPreset.FILE.value and not self.init.path:
            raise ConfigurationError("init.path: required for the file preset")
        if self.init.preset == InitPreset.UNIFORM_PERTURBED.value and abs(self.init.amplitude) >= 1:
            raise ConfigurationError("init.amplitude: must lie in (-1, 1) to keep the density positive")
        if self.time.delta < 0:
            raise ConfigurationError("time.delta: must be >= 0")
        if self.time.t_end <= self.time.delta:
            raise ConfigurationError("time.t_end: must exceed time.delta")
        return self

    def model_params(self) -> ModelParams:
        m = self.model
        try:
            return ModelParams(m.gamma, m.m, n=m.n, c=m.c, potential_sign=m.potential_sign)
        except (ValueError, AssertionError) as exc:
            raise ConfigurationError(f"model: {exc}") from None

    def grid_obj(self) -> Grid:
        g = self.grid
        try:
            kind = GridKind(g.kind)
            if kind is GridKind.PERIODIC:
                return Grid.periodic(g.points, g.length)
            return Grid.radial(g.points, g.length, g.ambient_dim)
        except (RenyiLangevinError, ValueError) as exc:
            raise ConfigurationError(f"grid: {exc}") from None

    def measure(self) -> WeightedMeasure:
        grid = self.grid_obj()
        preset = self.weight.preset
        try:
            if preset == WeightPreset.ZERO.value:
                return WeightedMeasure.zero(grid)
            if preset == WeightPreset.COSINE.value:
                return WeightedMeasure.cosine(grid, self.weight.amplitude)
            if preset == WeightPreset.QUADRATIC.value:
                return WeightedMeasure.quadratic(grid, self.weight.amplitude)
        except RenyiLangevinError as exc:
            raise ConfigurationError(f"weight: {exc}") from None
        raise ConfigurationError(f"weight.preset: unknown value {preset!r}")

    def solver_config(self) -> SolverConfig:
        s, t = self.solver, self.time
        try:
            Scheme(s.scheme)
            return SolverConfig(dt=t.dt, t_end=t.t_end, cfl=s.cfl, scheme=s.scheme,
                                density_floor=s.density_floor, diagnostic_stride=t.diagnostic_stride,
                                dealias=s.dealias)
        except ValueError as exc:
            raise ConfigurationError(f"solver/time: {exc}") from None


# ---------------------------------------------------------------- text and JSON I/O


def _strip_value(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def parse_config_text(text: str, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    items: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected section.key = value")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in items:
            raise ConfigurationError(f"{key}: given twice (line {lineno})")
        items[key] = _strip_value(value)
    return ScenarioConfig.from_flat(items, base=base)


def load_config(path: Union[str, Path], overrides: Iterable[str] = ()) -> ScenarioConfig:
    path = Path(path)
    if path.suffix == ".json":
        cfg = config_from_sidecar(path)
    else:
        cfg = parse_config_text(path.read_text(encoding="utf-8"))
    return cfg.with_overrides(overrides) if overrides else cfg


def format_config_text(cfg: ScenarioConfig) -> str:
    return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                   for k, v in cfg.to_flat().items())


def config_from_sidecar(path: Union[str, Path]) -> ScenarioConfig:
    """Rebuild the config echoed in a JSON sidecar."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "config" not in doc:
        raise ConfigurationError(f"{path}: no config echo in sidecar")
    return ScenarioConfig.from_flat(doc["config"])
