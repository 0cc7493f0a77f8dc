"""Command line entry point.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure,
4 a study, report or acceptance check did not pass.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..errors import ConfigurationError, RenyiLangevinError, SolverError
from ..wentropy import interior_mask
from .config import ScenarioConfig, load_config
from .report import monotonicity_report
from .scenario import run_reference, run_scenario
from .studies import converge_c_to_infinity, converge_c_to_zero, default_sweep_config

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_FAILED = 0, 2, 3, 4

log = logging.getLogger("renyi_langevin")


def _common(p: argparse.ArgumentParser, config_required=False):
    p.add_argument("--config", type=Path, required=config_required, help="scenario file (section.key = value)")
    p.add_argument("--out", type=Path, help="output path")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="replace one config entry (repeatable)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized property suites")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs in sweeps")
    p.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renyi-langevin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a scenario and write its diagnostics CSV")
    _common(p, config_required=True)
    p = sub.add_parser("reference", help="sample the exact reference solution (no integrator)")
    _common(p, config_required=True)
    p = sub.add_parser("wentropy", help="simulate and summarise both sides of the W-entropy formula")
    _common(p, config_required=True)
    for name, default in (("converge-zero", "0.4,0.2,0.1"), ("converge-inf", "2,4,8")):
        p = sub.add_parser(name, help=f"sweep c over {default}")
        _common(p)
        p.add_argument("--c-list", default=default, help="comma separated values of c")
    p = sub.add_parser("report", help="monotonicity and convexity verdicts for diagnostics files")
    p.add_argument("files", nargs="+", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--quiet", action="store_true")
    p = sub.add_parser("acceptance", help="run the acceptance checks")
    _common(p)
    p.add_argument("--only", type=int, action="append", help="criterion number (repeatable)")
    return parser


def _scenario(args) -> ScenarioConfig:
    return load_config(args.config, args.override)


def _emit(args, text: str):
    if not args.quiet:
        print(text)


def _write_json(path: Optional[Path], doc):
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _cmd_simulate(args) -> int:
    res = run_scenario(_scenario(args), args.out)
    _emit(args, f"wrote {res.csv_path} ({len(res.records)} rows) and {res.sidecar_path}")
    if res.error is not None:
        _emit(args, f"solver stopped early: {res.error}")
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_reference(args) -> int:
    res = run_reference(_scenario(args), args.out)
    _emit(args, f"wrote {res.csv_path} ({len(res.records)} rows) and {res.sidecar_path}")
    return EXIT_OK


def _cmd_wentropy(args) -> int:
    res = run_scenario(_scenario(args), args.out)
    _emit(args, f"wrote {res.csv_path}; W columns {res.w_status}")
    recs = res.records
    if recs and all(math.isfinite(r.residual) for r in recs):
        inner = interior_mask(len(recs))
        lhs = np.array([r.lhs_w_formula for r in recs])[inner]
        resid = np.array([r.residual for r in recs])[inner]
        rhs = lhs - resid
        rel = float(np.max(np.abs(resid) / np.maximum(np.abs(rhs), 1e-8)))
        _emit(args, f"max relative mismatch {rel:.3e}; min left side {float(np.min(lhs)):.3e}")
    return EXIT_SOLVER if res.error is not None else EXIT_OK


def _study(args, fn) -> int:
    base = _scenario(args) if args.config else default_sweep_config(
        **({"init.phi": "pressure"} if fn is converge_c_to_zero else {"init.phi": "cosine", "init.phi_amplitude": 0.3}))
    if args.override and args.config is None:
        base = base.with_overrides(args.override)
    speeds: List = [s.strip() for s in args.c_list.split(",") if s.strip()]
    if fn is converge_c_to_zero:
        speeds = [float(s) for s in speeds]
    res = fn(base, speeds, jobs=args.jobs)
    doc = res.to_json()
    _write_json(args.out, doc)
    _emit(args, json.dumps(doc, sort_keys=True))
    return EXIT_OK if res.passed else EXIT_FAILED


def _cmd_report(args) -> int:
    doc = monotonicity_report(args.files, args.out, tol=args.tol)
    for f, verdicts in doc["files"].items():
        for claim, v in verdicts.items():
            where = "" if v["at_t"] is None else f" at t = {v['at_t']!r}"
            _emit(args, f"{f}: {claim} {v['status']} (worst margin {v['worst_margin']:.3e}{where})")
    return EXIT_OK if doc["passed"] else EXIT_FAILED


def _cmd_acceptance(args) -> int:
    from ..acceptance import run_acceptance

    results = run_acceptance(args.only, seed=args.seed, jobs=args.jobs,
                             echo=None if args.quiet else print)
    _write_json(args.out, [{"criterion": r.number, "title": r.title, "passed": r.passed,
                            "measured": {k: _plain(v) for k, v in r.measured.items()}} for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


COMMANDS = {
    "simulate": _cmd_simulate,
    "reference": _cmd_reference,
    "wentropy": _cmd_wentropy,
    "converge-zero": lambda a: _study(a, converge_c_to_zero),
    "converge-inf": lambda a: _study(a, converge_c_to_infinity),
    "report": _cmd_report,
    "acceptance": _cmd_acceptance,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, RenyiLangevinError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
