"""Command-line front end: ``nme solve | verify | props``.

Exit codes: 0 success, 1 usage or I/O error, 2 mathematical failure.
All floats are written with 17 significant digits, so identical inputs
and seed give byte-identical files.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from nme.continuation import ContinuationConfig, solve, verify_theorem_bounds
from nme.errors import NMEError, SolverError
from nme.graded_space import BoundSeq, GradedElement, GradingSpec
from nme.tame_problems import CATALOG, check_tame_at, problem_from_config

EXIT_OK, EXIT_USAGE, EXIT_MATH = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for math failures
    def error(self, message):
        raise UsageError(message)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and ``"inf"``/``"nan"`` strings."""
    def enc(v, depth):
        pad = " " * (indent * (depth + 1))
        end = " " * (indent * depth)
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(val, depth + 1)}" for k, val in v.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(v, (list, tuple, np.ndarray)):
            seq = list(v)
            if not seq:
                return "[]"
            return "[" + ", ".join(enc(val, depth + 1) for val in seq) + "]"
        if v is None or isinstance(v, (bool, np.bool_)):
            return json.dumps(None if v is None else bool(v))
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            f = float(v)
            if math.isnan(f):
                return '"nan"'
            if math.isinf(f):
                return '"inf"' if f > 0 else '"-inf"'
            return format(f, ".17g")
        return json.dumps(str(v))
    return enc(obj, 0) + "\n"


def parse_target(text: str, spec: GradingSpec) -> GradedElement:
    """``"sin:k:amp"`` / ``"cos:k:amp"`` terms joined by ``+``, or a JSON file path.

    The file holds the element serialization ``{"K", "a", "b"}``.
    """
    if os.path.isfile(text):
        try:
            with open(text) as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read target file {text}: {exc}")
        try:
            return GradedElement.from_dict(data, spec)
        except (KeyError, ValueError, NMEError) as exc:
            raise UsageError(f"bad target file {text}: {exc}")
    y = GradedElement.zero(spec)
    for term in text.split("+"):
        parts = term.strip().split(":")
        if len(parts) != 3 or parts[0] not in ("sin", "cos"):
            raise UsageError(f"bad target term {term!r}; expected sin:k:amp or cos:k:amp")
        try:
            k, amp = int(parts[1]), float(parts[2])
        except ValueError:
            raise UsageError(f"bad target term {term!r}")
        if not 0 <= k <= spec.K or (parts[0] == "sin" and k == 0):
            raise UsageError(f"mode {term!r} outside degree 0..{spec.K}")
        y = y + GradedElement.mode(spec, parts[0], k, amp)
    return y


def _parse_c(text):
    if text is None:
        return None
    if text == "estimate":
        return text
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad constants {text!r}; use 'estimate' or comma-separated floats")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nme", description="Tame continuation solver for f(x) = y.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, doc in (("solve", "solve f(x) = y and write trace and outcome"),
                      ("verify", "solve, then check the tame bounds and residuals"),
                      ("props", "run the seeded property suites")):
        s = sub.add_parser(name, help=doc)
        s.add_argument("--config", help="problem configuration JSON")
        s.add_argument("--problem", choices=CATALOG)
        s.add_argument("--mu", type=float)
        s.add_argument("--K", type=int)
        s.add_argument("--N", type=int)
        s.add_argument("--q", type=int)
        s.add_argument("--seed", type=int, help="sampling seed (default: $NME_SEED or 0)")
        s.add_argument("--out-report", help="JSON report path (default: stdout)")
        if name == "props":
            continue
        s.add_argument("--y", default="sin:1:0.1", help="target, e.g. 'sin:1:0.5+cos:3:0.1'")
        s.add_argument("--eps", type=float, default=1e-3)
        s.add_argument("--r0", type=float, default=0.125)
        s.add_argument("--rmin", type=float, default=2.0 ** -20)
        s.add_argument("--growth", type=float, default=2.0)
        s.add_argument("--max-steps", type=int, default=1_000_000)
        s.add_argument("--levels", type=int, default=0,
                       help="highest monitored level (default 0; the defect test at "
                            "level n needs steps below eps/||h^2||_n)")
        s.add_argument("--out-trace", help="trace CSV path")
        if name == "verify":
            s.add_argument("--c", help="constants to verify: comma-separated or 'estimate'")
            s.add_argument("--slack", type=float, default=1e-6)
    return p


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("NME_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"NME_SEED must be an integer, got {env!r}")


def _problem_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    for key in ("problem", "mu", "K", "N", "q"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg.setdefault("problem", "identity")
    cfg.setdefault("K", 16)
    cfg.setdefault("N", 4)
    cfg["seed"] = _seed(args)
    return cfg


def _build_problem(cfg):
    try:
        return problem_from_config(cfg)
    except (ValueError, TypeError, KeyError, NMEError) as exc:
        raise UsageError(f"bad problem configuration: {exc}")


def _continuation_config(args):
    try:
        return ContinuationConfig(eps=args.eps, r0=args.r0, r_min=args.rmin,
                                  growth=args.growth, max_steps=args.max_steps,
                                  monitored_levels=args.levels)
    except ValueError as exc:
        raise UsageError(str(exc))


def _write(path: Optional[str], text: str):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}")


def _run_solve(args, problem, y, config):
    """Returns (outcome or None, error dict or None, trace)."""
    try:
        config.top_level(problem)
    except ValueError as exc:
        raise UsageError(str(exc))
    try:
        outcome = solve(problem, y, config)
        return outcome, None, outcome.trace
    except SolverError as exc:
        return None, {"error": type(exc).__name__, "message": str(exc), "t": exc.t}, exc.trace


def _header(cfg, problem, config):
    return {"problem": problem.name, "K": problem.spec.K, "N": problem.spec.N,
            "q": problem.spec.q, "d": problem.d, "mu": problem.params.get("mu"),
            "seed": cfg["seed"], "c": problem.c.to_json() if problem.c else None,
            "c_source": problem.c_source, "eps": config.eps,
            "monitored_levels": config.top_level(problem)}


def cmd_solve(args) -> int:
    cfg = _problem_config(args)
    problem = _build_problem(cfg)
    y = parse_target(args.y, problem.spec)
    config = _continuation_config(args)
    outcome, err, trace = _run_solve(args, problem, y, config)
    if args.out_trace and trace is not None:
        _write(args.out_trace, trace.to_csv())
    report = _header(cfg, problem, config)
    report["y"] = y.to_dict()
    if err is not None:
        report.update(err, success=False)
        _write(args.out_report, dumps(report))
        return EXIT_MATH
    report.update(outcome.to_dict(), success=outcome.success)
    _write(args.out_report, dumps(report))
    return EXIT_OK if outcome.success else EXIT_MATH


def cmd_verify(args) -> int:
    cfg = _problem_config(args)
    problem = _build_problem(cfg)
    y = parse_target(args.y, problem.spec)
    config = _continuation_config(args)
    claimed = problem
    c = _parse_c(args.c)
    if c is not None:
        claimed = _build_problem(dict(cfg, c=c)) if c == "estimate" else \
            problem.with_constants(_bounds(c, problem.spec.N), "user")
    outcome, err, trace = _run_solve(args, problem, y, config)
    if args.out_trace and trace is not None:
        _write(args.out_trace, trace.to_csv())
    report = _header(cfg, claimed, config)
    report["y"] = y.to_dict()
    if err is not None:
        report.update(err, success=False, **{"pass": False})
        _write(args.out_report, dumps(report))
        return EXIT_MATH
    bounds = verify_theorem_bounds(outcome, claimed, y, slack=args.slack, eps=config.eps,
                                   levels=config.top_level(problem))
    tame = [check_tame_at(claimed, x, y, slack=args.slack).to_dict()
            for x in (GradedElement.zero(problem.spec), outcome.x_final)]
    passed = bounds.passed and all(t["pass"] for t in tame) and outcome.success
    report.update(solve=outcome.to_dict(), bounds=bounds.to_dict(),
                  tame_checks=tame, success=outcome.success, **{"pass": passed})
    _write(args.out_report, dumps(report))
    return EXIT_OK if passed else EXIT_MATH


def _bounds(values, N):
    if len(values) == 1:
        values = values * (N + 1)
    if len(values) != N + 1:
        raise UsageError(f"need 1 or {N + 1} constants, got {len(values)}")
    try:
        return BoundSeq.of(values)
    except (ValueError, NMEError) as exc:
        raise UsageError(str(exc))


def cmd_props(args) -> int:
    from nme.properties import run_all
    cfg = _problem_config(args)
    results = run_all(seed=cfg["seed"], K=int(cfg["K"]), N=int(cfg["N"]),
                      q=int(cfg.get("q", 4)))
    passed = all(r.passed for r in results)
    _write(args.out_report, dumps({"seed": cfg["seed"], "pass": passed,
                                   "properties": [r.to_dict() for r in results]}))
    return EXIT_OK if passed else EXIT_MATH


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "props": cmd_props}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"nme: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NMEError as exc:
        print(f"nme: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
