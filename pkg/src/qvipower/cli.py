"""Command-line interface: ``qvipower {solve,analyze,experiment,oracle}``.

Exit codes: 0 on success, 1 on bad input, 2 when a solver hits its cap.
Verbosity follows the ``QVIPOWER_LOG`` environment variable
(``error``, ``warn``, ``info`` or ``debug``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import oracles
from .analysis import analyze
from .errors import InvalidInstance, NonConvergence, QviPowerError
from .experiment import (ExperimentSpec, atomic_write_text, relative_distance, run_convergence_probability,
                         run_dynamics, write_outputs)
from .model import GameInstance
from .solvers import SolverConfig, ncp_solve, spa_solve
from .waterfill import level_for_budget, project_simplex

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
           "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("qvipower")


class InputError(Exception):
    pass


def _read(path) -> str:
    if path is None:
        raise InputError("an input file is required")
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def load_instance(path) -> GameInstance:
    return GameInstance.from_json(_read(path))


def _solver_config(args) -> SolverConfig:
    kw = {}
    if args.eps is not None:
        kw["outer_eps"] = args.eps
    if args.max_iter is not None:
        kw["max_outer"] = args.max_iter
    if args.seed is not None:
        kw["seed"] = args.seed
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    cfg = _solver_config(args)
    out = Path(args.out)
    names = ("spa", "ncp") if args.solver == "both" else (args.solver,)
    summary, profiles = {}, {}
    for name in names:
        fn = spa_solve if name == "spa" else ncp_solve
        p, trace = fn(inst, cfg)
        atomic_write_text(out / f"trace_{name}.csv", trace.to_csv())
        info = trace.summary()
        info["power"] = p
        info["sum_power"] = p.sum(axis=1)
        summary[name] = info
        profiles[name] = p
        log.info("%s: %s", name, trace.message)
    if len(profiles) == 2 and all(summary[n]["converged"] for n in names):
        summary["agreement"] = relative_distance(profiles["ncp"], profiles["spa"])
    text = _dump(summary)
    atomic_write_text(out / "summary.json", text)
    sys.stdout.write(text)
    return EXIT_OK if all(summary[n]["converged"] for n in names) else EXIT_NONCONVERGENCE


def cmd_analyze(args) -> int:
    inst = load_instance(args.instance)
    seed = 0 if args.seed is None else args.seed
    report = analyze(inst, sample_count=args.samples, seed=seed)
    text = _dump(report.to_dict())
    atomic_write_text(Path(args.out) / "analysis.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_json(_read(args.spec))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    overrides = {}
    if args.eps is not None:
        overrides["outer_eps"] = args.eps
    if args.max_iter is not None:
        overrides["max_outer"] = args.max_iter
    if overrides:
        spec = replace(spec, ncp={**spec.ncp, **overrides}, spa={**spec.spa, **overrides})
    out = args.out or spec.out_dir or "."
    rows, records = run_convergence_probability(spec, jobs=args.jobs)
    dyn = run_dynamics(spec) if spec.dynamics_sir_db is not None else None
    for path in write_outputs(spec, out, rows, records, dyn):
        log.info("wrote %s", path)
    for r in rows:
        sys.stdout.write(f"SIR {r.sir_db:g} dB: P_c = {r.p_c:.3f} ({r.converged}/{r.trials})\n")
    return EXIT_OK


def _floats(text) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.replace(",", " ").split()])
    except ValueError:
        raise InputError(f"not a list of numbers: {text!r}") from None


def cmd_oracle(args) -> int:
    if args.problem == "waterfill":
        zeta = _floats(args.zeta)
        result = {"bisection": oracles.waterfill_bisection(zeta, args.budget),
                  "fast": level_for_budget(zeta, args.budget).power}
    elif args.problem == "project":
        z = _floats(args.z)
        result = {"fast": project_simplex(z, args.budget)}
        if z.size <= 3:
            result["grid"] = oracles.simplex_grid_projection(z, args.budget, steps=args.steps)
    elif args.problem == "ee":
        zeta = _floats(args.zeta)
        s, val = oracles.ee_optimum_golden(zeta, args.circuit, args.budget)
        result = {"total_power": s, "ee": val, "power": oracles.waterfill_bisection(zeta, s)}
    else:  # best-response
        zeta = _floats(args.zeta)
        power, val = oracles.grid_best_response(zeta, args.budget, args.circuit, steps=args.steps,
                                                mass_steps=args.steps)
        result = {"power": power, "objective": val}
    sys.stdout.write(_dump(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qvipower", description="Power-allocation games with rate and EE links.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--instance", required=True, help="instance JSON file")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("solve", help="compute an equilibrium")
    common(p)
    p.add_argument("--solver", choices=("spa", "ncp", "both"), default="both")
    p.add_argument("--eps", type=float, default=None, help="outer tolerance")
    p.add_argument("--max-iter", type=int, default=None, help="outer iteration cap")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("analyze", help="uniqueness report")
    common(p)
    p.add_argument("--samples", type=int, default=200, help="profile pairs used to estimate delta")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("experiment", help="Monte Carlo SIR sweep and dynamics")
    p.add_argument("--spec", required=True, help="experiment spec JSON file")
    p.add_argument("--out", default=None, help="output directory (default: spec out_dir or current)")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="brute-force reference computations")
    p.add_argument("problem", choices=("waterfill", "project", "ee", "best-response"))
    p.add_argument("--zeta", default="1", help="effective noise, e.g. '0.1,0.3'")
    p.add_argument("--z", default="0", help="point to project (project only)")
    p.add_argument("--budget", type=float, default=1.0, help="power budget or simplex mass")
    p.add_argument("--circuit", type=float, default=None, help="circuit power (EE objective)")
    p.add_argument("--steps", type=int, default=200, help="grid resolution")
    p.set_defaults(func=cmd_oracle)
    return parser


def _configure_logging():
    level = _LEVELS.get(os.environ.get("QVIPOWER_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    if args.command == "oracle" and args.problem == "ee" and args.circuit is None:
        parser.error("the ee oracle needs --circuit")
    try:
        return args.func(args)
    except InvalidInstance as exc:
        print(f"error: invalid field '{exc.field}': {exc.message}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (QviPowerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
