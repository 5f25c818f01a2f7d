"""JSON run configuration.

Example::

    {
      "T": 2, "eta": "3/2", "alpha": 1, "beta": 0.5,
      "a": "t", "f": "u^2",
      "solver": {"method": "Newton", "panels": [400, 400], "tol": 1e-10,
                 "multistart": [0.1, 1, 10]},
      "output": {"csv": "solution.csv", "report": "report.json"}
    }

Numeric parameters may be given as numbers or as constant expressions ("3/2").
Relative output paths resolve against the directory holding the config file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from .errors import ConfigError, ExprError, ParameterError
from .expr import constant_value, parse_expr
from .params import ProblemSpec
from .solver import SolverOptions

_NUMBER = {"type": ["number", "string"]}

SCHEMA = {
    "type": "object",
    "required": ["T", "eta", "alpha", "beta", "a", "f"],
    "additionalProperties": False,
    "properties": {
        "T": _NUMBER,
        "eta": _NUMBER,
        "alpha": _NUMBER,
        "beta": _NUMBER,
        "a": {"type": "string", "minLength": 1},
        "f": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["Newton", "Picard", "newton", "picard"]},
                "panels": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 2},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "init": {"enum": ["Constant", "LinearSolveOfA"]},
                "init_value": {"type": "number"},
                "multistart": {"type": "array", "items": {"type": "number"}},
                "trivial_floor": {"type": "number", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": "string"}, "report": {"type": "string"}},
        },
    },
}


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    solver: SolverOptions
    csv_path: Optional[Path] = None
    report_path: Optional[Path] = None
    source: Optional[Path] = None

    def with_panels(self, m: int, n: int) -> "RunConfig":
        try:
            return replace(self, solver=replace(self.solver, m=m, n=n))
        except ParameterError as exc:
            raise ConfigError(str(exc), "solver.panels") from exc


def _key_path(error: jsonschema.ValidationError) -> str:
    parts = list(error.absolute_path)
    if error.validator == "required":
        missing = error.message.split("'")[1]
        parts.append(missing)
    return ".".join(str(p) for p in parts) or "<root>"


def fixture_names():
    root = resources.files("conebvp") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config_path(path) -> Path:
    """Accept a filesystem path or ``fixture:<name>`` for a bundled example."""
    text = str(path)
    if text.startswith("fixture:"):
        name = text.split(":", 1)[1]
        if name not in fixture_names():
            raise ConfigError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
        return Path(str(resources.files("conebvp") / "fixtures" / f"{name}.json"))
    return Path(path)


def _check_writable(path: Path, key: str):
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise ConfigError(f"directory {str(parent)!r} does not exist", key)
    if not os.access(parent, os.W_OK) or (path.exists() and not os.access(path, os.W_OK)):
        raise ConfigError(f"{str(path)!r} is not writable", key)


def parse_config(data: dict, base_dir: Optional[Path] = None, source: Optional[Path] = None) -> RunConfig:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message, _key_path(exc)) from None

    values = {}
    for key in ("T", "eta", "alpha", "beta"):
        try:
            values[key] = constant_value(data[key])
        except ExprError as exc:
            raise ConfigError(str(exc), key) from exc
    exprs = {}
    for key, var in (("a", "t"), ("f", "u")):
        try:
            exprs[key] = parse_expr(data[key], var)
        except ExprError as exc:
            raise ExprError(f"{key}: {exc}") from exc
    a_expr, f_expr = exprs["a"], exprs["f"]
    try:
        spec = ProblemSpec(values["T"], values["eta"], values["alpha"], values["beta"], a_expr, f_expr)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc

    s = data.get("solver", {})
    kwargs = {}
    if "method" in s:
        kwargs["method"] = s["method"].capitalize()
    if "panels" in s:
        kwargs["m"], kwargs["n"] = s["panels"]
    for key in ("tol", "max_iter", "damping", "init", "init_value", "trivial_floor"):
        if key in s:
            kwargs[key] = s[key]
    if "multistart" in s:
        kwargs["multistart"] = tuple(s["multistart"])
    try:
        solver = SolverOptions(**kwargs)
    except ParameterError as exc:
        raise ConfigError(str(exc), "solver") from exc

    out = data.get("output", {})
    base = base_dir or Path(".")
    csv_path = base / out["csv"] if "csv" in out else None
    report_path = base / out["report"] if "report" in out else None
    for key, p in (("output.csv", csv_path), ("output.report", report_path)):
        if p is not None:
            _check_writable(p, key)
    return RunConfig(spec, solver, csv_path, report_path, source)


def load_config(path) -> RunConfig:
    path = resolve_config_path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return parse_config(data, path.parent, path)
