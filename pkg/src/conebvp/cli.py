"""Command-line front end.

    conebvp <classify|solve|verify|limits|probe> --config <path> [--out-csv <path>]
            [--out-report <path>] [--panels m,n] [--seed <int>]

Exit codes: 0 success, 2 config error, 3 solver non-convergence, 4 check failure,
5 expression error. ``CONEBVP_SEED`` overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import (
    check_hypotheses,
    estimate_limits,
    linear_shape_suite,
    nonexistence_probe,
    nonexistence_suite,
    proof_constants,
    verify_solution,
    CheckResult,
)
from .config import RunConfig, load_config
from .errors import ConeBVPError, ConfigError, ParameterError
from .expr import eval_expr, to_text
from .grid import GridFunction, build_mesh
from .params import Region, classify, require_region
from .solver import residuals, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_CHECK_FAILED = 4
EXIT_EXPR = 5

COMMANDS = ("classify", "solve", "verify", "limits", "probe")
RESIDUAL_RTOL = 1e-6


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n")


def write_csv(path: Path, u: GridFunction):
    lines = ["t,u"]
    lines += [f"{t:.17g},{v:.17g}" for t, v in zip(u.nodes, u.values)]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: Path, spec) -> GridFunction:
    """Read a ``t,u`` CSV written by :func:`write_csv` back onto its two-panel mesh."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read solution CSV {str(path)!r}: {exc}") from exc
    t, v = data[:, 0], data[:, 1]
    m = int(np.argmin(np.abs(t - spec.eta)))
    n = len(t) - 1 - m
    try:
        mesh = build_mesh(spec.T, spec.eta, m, n)
    except ParameterError as exc:
        raise ConfigError(f"solution CSV does not lie on a two-panel mesh: {exc}") from exc
    if not np.allclose(mesh.nodes, t, rtol=0, atol=1e-12 * spec.T):
        raise ConfigError("solution CSV nodes do not match the two-panel mesh for this problem")
    return GridFunction(mesh, v)


def _default_path(cfg: RunConfig, suffix: str) -> Path:
    stem = cfg.source.stem if cfg.source else "conebvp"
    return Path.cwd() / f"{stem}{suffix}"


def _fallback_report_path(config_arg: str) -> Path:
    """Report location when the config itself could not be loaded."""
    stem = config_arg.split(":", 1)[1] if config_arg.startswith("fixture:") else Path(config_arg).stem
    return Path.cwd() / f"{stem or 'conebvp'}.report.json"


def _residual_checks(u, spec, res):
    scale = 1.0 + u.sup_norm()
    tol = RESIDUAL_RTOL * scale
    out = []
    for name, value in (("bc0_residual", res.bc0), ("bcT_residual", res.bcT), ("fixed_point_residual", res.fixed_point)):
        margin = tol - value if math.isfinite(value) else -math.inf
        out.append(CheckResult(name, margin >= 0, margin, tol, {"value": value}))
    return out


def _solve_payload(cfg: RunConfig):
    report = solve(cfg.spec, cfg.solver)
    checks = [check_hypotheses(cfg.spec)] + list(report.checks)
    checks += _residual_checks(report.solution, cfg.spec, report.residuals)
    report.checks = checks
    payload = report.to_dict()
    payload["problem"] = _problem_dict(cfg)
    payload["limits"] = estimate_limits(cfg.spec.f_expr).to_dict()
    return report, payload


def _problem_dict(cfg: RunConfig):
    s = cfg.spec
    return {
        "T": s.T,
        "eta": s.eta,
        "alpha": s.alpha,
        "beta": s.beta,
        "a": to_text(s.a_expr),
        "f": to_text(s.f_expr),
    }


def cmd_classify(cfg, args, out):
    cls = classify(cfg.spec)
    payload = {"command": "classify", "problem": _problem_dict(cfg), "classification": cls.to_dict()}
    return EXIT_OK, payload


def cmd_limits(cfg, args, out):
    est = estimate_limits(cfg.spec.f_expr)
    return EXIT_OK, {"command": "limits", "problem": _problem_dict(cfg), "limits": est.to_dict()}


def cmd_solve(cfg, args, out):
    report, payload = _solve_payload(cfg)
    payload["command"] = "solve"
    write_csv(out["csv"], report.solution)
    payload["csv"] = str(out["csv"])
    if not report.converged:
        return EXIT_NOT_CONVERGED, payload
    if not report.checks_passed:
        return EXIT_CHECK_FAILED, payload
    return EXIT_OK, payload


def cmd_verify(cfg, args, out):
    spec = cfg.spec
    if args.solution:
        u = read_csv(Path(args.solution), spec)
        cls = require_region(spec, (Region.ADMISSIBLE, Region.NO_POSITIVE_SOLUTION, Region.OUTSIDE_THEORY), "verify")
        res = residuals(u, spec)
        checks = [check_hypotheses(spec)] + verify_solution(u, spec) + _residual_checks(u, spec, res)
        payload = {
            "classification": cls.to_dict(),
            "residuals": res.to_dict(),
            "checks": [c.to_dict() for c in checks],
            "solution_source": str(args.solution),
        }
        converged = True
        try:
            payload["constants"] = proof_constants(spec, u.mesh).to_dict()
        except ParameterError as exc:
            payload["constants"] = None
            payload["notes"] = [str(exc)]
        payload["limits"] = estimate_limits(spec.f_expr).to_dict()
    else:
        report, payload = _solve_payload(cfg)
        checks = report.checks
        converged = report.converged
        write_csv(out["csv"], report.solution)
        payload["csv"] = str(out["csv"])
    payload["command"] = "verify"
    payload["problem"] = _problem_dict(cfg)
    payload["seed"] = args.seed
    suites = [
        linear_shape_suite(args.samples, seed=args.seed),
        nonexistence_suite(max(1, args.samples // 2), seed=args.seed + 1),
    ]
    payload["property_suites"] = [s.to_dict() for s in suites]
    if not converged:
        return EXIT_NOT_CONVERGED, payload
    if not (all(c.passed for c in checks) and all(s.passed for s in suites)):
        return EXIT_CHECK_FAILED, payload
    return EXIT_OK, payload


def cmd_probe(cfg, args, out):
    spec = cfg.spec
    require_region(spec, (Region.NO_POSITIVE_SOLUTION,), "probe")
    mesh = build_mesh(spec.T, spec.eta, cfg.solver.m, cfg.solver.n)
    y = GridFunction(mesh, np.broadcast_to(eval_expr(spec.a_expr, mesh.nodes), mesh.nodes.shape))
    result = nonexistence_probe(spec, y)
    payload = {
        "command": "probe",
        "problem": _problem_dict(cfg),
        "classification": classify(spec).to_dict(),
        "checks": [result.to_dict()],
    }
    return (EXIT_OK if result.passed else EXIT_CHECK_FAILED), payload


HANDLERS = {
    "classify": cmd_classify,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "limits": cmd_limits,
    "probe": cmd_probe,
}


def _parse_panels(text):
    try:
        m, n = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--panels expects m,n (two integers), got {text!r}")
    return m, n


def build_parser():
    p = argparse.ArgumentParser(
        prog="conebvp",
        description="Solve and verify u'' + a(t) f(u) = 0, u(0) = beta u(eta), u(T) = alpha int_0^eta u.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON config path, or fixture:<name>")
    p.add_argument("--out-csv", help="solution CSV path (overrides config)")
    p.add_argument("--out-report", help="JSON report path (overrides config)")
    p.add_argument("--panels", type=_parse_panels, help="subinterval counts m,n on [0,eta] and [eta,T]")
    p.add_argument("--seed", type=int, default=0, help="seed for the randomized property suites")
    p.add_argument("--samples", type=int, default=200, help="property-suite sample count (verify)")
    p.add_argument("--solution", help="verify a previously written solution CSV instead of solving")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    env_seed = os.environ.get("CONEBVP_SEED")
    report_path = Path(args.out_report) if args.out_report else None
    try:
        if env_seed is not None:
            try:
                args.seed = int(env_seed)
            except ValueError:
                raise ConfigError(f"CONEBVP_SEED must be an integer, got {env_seed!r}")
        cfg = load_config(args.config)
        if args.panels:
            cfg = cfg.with_panels(*args.panels)
        report_path = report_path or cfg.report_path
        if report_path is None and args.command in ("solve", "verify"):
            report_path = _default_path(cfg, ".report.json")
        out = {
            "csv": Path(args.out_csv) if args.out_csv else (cfg.csv_path or _default_path(cfg, ".csv")),
        }
        code, payload = HANDLERS[args.command](cfg, args, out)
        payload["exit_code"] = code
    except ConeBVPError as exc:
        code = exc.exit_code
        payload = {
            "command": args.command,
            "exit_code": code,
            "error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code},
        }
        print(f"conebvp: error: {exc}", file=sys.stderr)
        if report_path is None and args.command in ("solve", "verify"):
            report_path = _fallback_report_path(args.config)
        if report_path is not None:
            try:
                write_json(report_path, payload)
            except OSError:
                pass
        return code
    if report_path is not None:
        write_json(report_path, payload)
        payload["report"] = str(report_path)
    summary = {k: v for k, v in payload.items() if k not in ("trace", "checks", "property_suites")}
    if "checks" in payload:
        summary["checks"] = {c["name"]: c["passed"] for c in _jsonable(payload["checks"])}
    if "property_suites" in payload:
        summary["property_suites"] = {s["name"]: s["passed"] for s in payload["property_suites"]}
    print(json.dumps(_jsonable(summary), indent=2))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
