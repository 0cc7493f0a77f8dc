"""Monotonicity and convexity verdicts read back from diagnostics files."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from ..errors import ConfigurationError
from ..fields import ModelParams
from ..wentropy import MIN_STENCIL, interior_mask
from .scenario import CSV_COLUMNS, read_csv, sidecar_path_for

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "n/a"


class SchemaError(ConfigurationError):
    """A diagnostics file lacks required columns."""


@dataclass
class Verdict:
    status: str
    # most negative margin found (0 when nothing was violated), and where
    worst_margin: float = 0.0
    at_t: Optional[float] = None
    detail: str = ""


def _params_from_sidecar(csv_path: Path) -> Optional[ModelParams]:
    side = sidecar_path_for(csv_path)
    if not side.exists():
        return None
    cfg = json.loads(side.read_text(encoding="utf-8")).get("config", {})
    try:
        return ModelParams(float(cfg["model.gamma"]), float(cfg["model.m"]), n=int(cfg["model.n"]),
                           c=cfg["model.c"], potential_sign=int(cfg["model.potential_sign"]))
    except (KeyError, ValueError, TypeError):
        return None


def _defined(col: np.ndarray) -> bool:
    return col.size > 0 and bool(np.all(np.isfinite(col)))


def _lower_bound(values: np.ndarray, t: np.ndarray, tol: float, what: str) -> Verdict:
    """values >= -tol everywhere."""
    if values.size == 0:
        return Verdict(NOT_APPLICABLE, detail=f"too few samples for {what}")
    i = int(np.argmin(values))
    worst = float(min(values[i], 0.0))
    status = PASS if values[i] >= -tol else FAIL
    return Verdict(status, worst, float(t[i]) if worst < 0 else None, what)


def _scaled_tol(values: np.ndarray, tol: float) -> float:
    return tol * max(1.0, float(np.max(np.abs(values))))


def check_columns(data: Dict[str, np.ndarray], path="") -> None:
    missing = [c for c in CSV_COLUMNS if c not in data]
    if missing:
        raise SchemaError(f"{path}: missing columns {', '.join(missing)}")


def verdicts_for(data: Dict[str, np.ndarray], params: Optional[ModelParams] = None,
                 tol: float = 1e-8) -> Dict[str, Verdict]:
    check_columns(data)
    t = data["t"]
    out: Dict[str, Verdict] = {}

    H = data["hamiltonian"]
    if _defined(H) and H.size >= 2:
        out["hamiltonian_nonincreasing"] = _lower_bound(-np.diff(H), t[1:], _scaled_tol(H, tol),
                                                        "-(H[i+1] - H[i])")
    else:
        out["hamiltonian_nonincreasing"] = Verdict(NOT_APPLICABLE, detail="no Hamiltonian column")

    # convexity of L is claimed for the -Ent system only
    L = data["lagrangian"]
    if params is not None and params.potential_sign == -1 and _defined(L) and L.size >= 3:
        out["lagrangian_convex"] = _lower_bound(np.diff(L, 2), t[1:-1], _scaled_tol(L, tol),
                                                "second differences of L")
    else:
        out["lagrangian_convex"] = Verdict(NOT_APPLICABLE, detail="needs a -Ent run with a Lagrangian column")

    lhs = data["lhs_w_formula"]
    if _defined(lhs):
        # the two samples at each end carry one-sided time stencils
        inner = interior_mask(lhs.size) if lhs.size > 2 * MIN_STENCIL else np.ones(lhs.size, bool)
        out["w_entropy_monotone"] = _lower_bound(lhs[inner], t[inner], tol,
                                                 "left side of the W-entropy formula")
    else:
        out["w_entropy_monotone"] = Verdict(NOT_APPLICABLE, detail="no W-entropy columns")

    Hcm, Wcm = data["H_cm"], data["W_cm"]
    regime = params.regime.name if params is not None else None
    if params is not None and regime == "GRADIENT_FLOW" and _defined(Hcm) and Hcm.size >= 3 and np.all(t > 0):
        g = t ** (2 - 2 * params.k) * Hcm
        out["scaled_relative_entropy_convex"] = _lower_bound(np.diff(g, 2), t[1:-1], tol,
                                                             "second differences of t^(2-2k) H_cm")
    else:
        out["scaled_relative_entropy_convex"] = Verdict(NOT_APPLICABLE, detail="needs a c = 0 run with H_cm")

    # If H and W start nonnegative then W = d/dt(t^e H) with W nondecreasing keeps H >= 0.
    if params is not None and regime in ("GRADIENT_FLOW", "GEODESIC") and _defined(Hcm) and _defined(Wcm):
        if Hcm[0] >= -tol and Wcm[0] >= -tol:
            out["entropy_comparison"] = _lower_bound(Hcm, t, tol, "H_cm under nonnegative initial H and W")
        else:
            out["entropy_comparison"] = Verdict(NOT_APPLICABLE, detail="initial H_cm or W_cm negative")
    else:
        out["entropy_comparison"] = Verdict(NOT_APPLICABLE, detail="needs a c = 0 or c = inf run with W columns")
    return out


def monotonicity_report(paths: Sequence[Union[str, Path]], out: Optional[Union[str, Path]] = None,
                        tol: float = 1e-8) -> dict:
    """Verdicts for each diagnostics file; written as JSON when ``out`` is given."""
    files = {}
    for p in paths:
        p = Path(p)
        data = read_csv(p)
        check_columns(data, p)
        v = verdicts_for(data, _params_from_sidecar(p), tol)
        files[str(p)] = {k: asdict(x) for k, x in v.items()}
    failed = [f"{f}:{k}" for f, v in files.items() for k, x in v.items() if x["status"] == FAIL]
    doc = {"tolerance": tol, "files": files, "failed": failed, "passed": not failed}
    if out is not None:
        Path(out).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n",
                             encoding="utf-8")
    return doc


def _json_default(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    raise TypeError(type(x))
