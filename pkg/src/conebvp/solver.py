"""Nonlinear solves of u'' + a(t) f(u) = 0 with the three-point integral conditions.

Two routes to the same discrete solution:

* Picard iteration on the operator ``A u = solve_linear(a * f(u))``.
* Damped Newton on a collocation system whose interior rows are the second
  difference of u plus the 1-2-1 averaged forcing. That averaging is exactly what the
  double-trapezoid kernel inverts, so a Newton root is a fixed point of the same
  discrete ``A`` to roundoff, and Picard and Newton can be compared node by node.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .checks import ProofConstants, proof_constants, verify_solution
from .errors import ExprDomainError, ExprOverflowError, ParameterError
from .expr import diff, eval_expr, to_text
from .grid import DEFAULT_PANELS, MAX_PANELS, GridFunction, Mesh, build_mesh, left_panel_weights
from .kernel import boundary_residuals, solve_linear
from .params import ParamClassification, ProblemSpec, Region, require_region

EVAL_FLOOR = 1e-12
MAX_HALVINGS = 30


class Method(str, enum.Enum):
    PICARD = "Picard"
    NEWTON = "Newton"


class InitKind(str, enum.Enum):
    CONSTANT = "Constant"
    LINEAR_SOLVE_OF_A = "LinearSolveOfA"


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    NOT_CONVERGED = "NotConverged"
    TRIVIAL_LIMIT = "TrivialLimit"


@dataclass(frozen=True)
class SolverOptions:
    method: Method = Method.NEWTON
    m: int = DEFAULT_PANELS
    n: int = DEFAULT_PANELS
    tol: float = 1e-10
    max_iter: int = 100
    damping: float = 1.0
    init: InitKind = InitKind.CONSTANT
    init_value: float = 1.0
    multistart: tuple = (0.1, 1.0, 10.0)
    trivial_floor: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "init", InitKind(self.init))
        object.__setattr__(self, "multistart", tuple(float(x) for x in self.multistart))
        for name in ("m", "n"):
            k = getattr(self, name)
            if isinstance(k, bool) or int(k) != k or k < 2 or k % 2 or k > MAX_PANELS:
                raise ParameterError(f"panel count {name} must be even in [2, {MAX_PANELS}], got {k!r}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ParameterError(f"max_iter must be an integer >= 1, got {self.max_iter}")
        if not 0.0 < self.damping <= 1.0:
            raise ParameterError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.trivial_floor >= 0:
            raise ParameterError(f"trivial_floor must be nonnegative, got {self.trivial_floor}")


@dataclass(frozen=True)
class Residuals:
    ode_sup: float
    bc0: float
    bcT: float
    fixed_point: float

    def to_dict(self):
        return {"ode_sup": self.ode_sup, "bc0": self.bc0, "bcT": self.bcT, "fixed_point": self.fixed_point}


@dataclass
class SolveReport:
    converged: bool
    status: Status
    solution: GridFunction
    residuals: Residuals
    iterations: int
    init_used: Optional[float]
    classification: ParamClassification
    method: Method
    checks: list = field(default_factory=list)
    constants: Optional[ProofConstants] = None
    trace: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    clamp_events: int = 0
    floor_events: int = 0

    @property
    def checks_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self):
        u = self.solution
        return {
            "method": self.method.value,
            "converged": self.converged,
            "status": self.status.value,
            "iterations": self.iterations,
            "init_used": self.init_used,
            "sup_norm": u.sup_norm(),
            "min_value": float(u.values.min()),
            "panels": [u.mesh.m, u.mesh.n],
            "classification": self.classification.to_dict(),
            "residuals": self.residuals.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
            "constants": self.constants.to_dict() if self.constants else None,
            "trace": self.trace,
            "notes": self.notes,
            "clamp_events": self.clamp_events,
            "floor_events": self.floor_events,
        }


class _Nonlinearity:
    """a(t) sampled on the mesh, f and f' evaluated with the domain repairs:
    negative nodes clamped to 0, and nodes below EVAL_FLOOR lifted to it when f is
    undefined at 0."""

    def __init__(self, spec: ProblemSpec, mesh: Mesh):
        if spec.a_expr is None or spec.f_expr is None:
            raise ParameterError("the nonlinear problem needs both a(t) and f(u)")
        self.spec = spec
        self.mesh = mesh
        self.a = np.broadcast_to(eval_expr(spec.a_expr, mesh.nodes), mesh.nodes.shape).copy()
        self.f_expr = spec.f_expr
        self._df_expr = None
        self.clamp_events = 0
        self.floor_events = 0

    @property
    def df_expr(self):
        if self._df_expr is None:
            self._df_expr = diff(self.f_expr, "u")
        return self._df_expr

    def _eval(self, expr, u):
        try:
            return np.broadcast_to(eval_expr(expr, u), u.shape)
        except ExprDomainError:
            low = u < EVAL_FLOOR
            if not low.any():
                raise
            self.floor_events += int(low.sum())
            return np.broadcast_to(eval_expr(expr, np.maximum(u, EVAL_FLOOR)), u.shape)

    def _clamp(self, u):
        neg = u < 0
        if neg.any():
            self.clamp_events += 1
            return np.where(neg, 0.0, u), neg
        return u, neg

    def forcing(self, u: np.ndarray) -> np.ndarray:
        uc, _ = self._clamp(np.asarray(u, dtype=float))
        return self.a * self._eval(self.f_expr, uc)

    def forcing_derivative(self, u: np.ndarray) -> np.ndarray:
        uc, neg = self._clamp(np.asarray(u, dtype=float))
        d = self.a * self._eval(self.df_expr, uc)
        return np.where(neg, 0.0, d)


def apply_A(u: GridFunction, spec: ProblemSpec, _nl: Optional[_Nonlinearity] = None) -> GridFunction:
    """A u = solve_linear(a * f(u)); negative nodes of u are clamped to 0 first."""
    require_region(spec, (Region.ADMISSIBLE, Region.NO_POSITIVE_SOLUTION), "apply_A")
    nl = _nl or _Nonlinearity(spec, u.mesh)
    y = nl.forcing(u.values)
    return solve_linear(GridFunction(u.mesh, y), spec)


def residuals(u: GridFunction, spec: ProblemSpec, _nl: Optional[_Nonlinearity] = None) -> Residuals:
    mesh = u.mesh
    nl = _nl or _Nonlinearity(spec, mesh)
    v = u.values
    y = nl.forcing(v)
    m, h1, h2 = mesh.m, mesh.h1, mesh.h2
    d2 = np.empty(mesh.size - 2)
    d2[: m - 1] = (v[: m - 1] - 2.0 * v[1:m] + v[2 : m + 1]) / h1**2
    d2[m:] = (v[m : -2] - 2.0 * v[m + 1 : -1] + v[m + 2 :]) / h2**2
    d2[m - 1] = 2.0 / (h1 + h2) * ((v[m + 1] - v[m]) / h2 - (v[m] - v[m - 1]) / h1)
    ode_sup = float(np.max(np.abs(d2 + y[1:-1])))
    bc0, bcT = boundary_residuals(u, spec)
    Au = solve_linear(GridFunction(mesh, y), spec)
    fixed = float(np.max(np.abs(Au.values - v)))
    return Residuals(ode_sup, bc0, bcT, fixed)


def _finish(spec, opts, nl, cls, u, status, iterations, init_used, method, trace, notes):
    try:
        res = residuals(u, spec, nl)
    except ExprOverflowError as exc:
        notes.append(f"residuals not computable on the final iterate: {exc}")
        res = Residuals(math.inf, math.inf, math.inf, math.inf)
    report = SolveReport(
        converged=status is Status.CONVERGED,
        status=status,
        solution=u,
        residuals=res,
        iterations=iterations,
        init_used=init_used,
        classification=cls,
        method=method,
        trace=trace,
        notes=notes,
        clamp_events=nl.clamp_events,
        floor_events=nl.floor_events,
    )
    report.checks = verify_solution(u, spec)
    try:
        report.constants = proof_constants(spec, u.mesh)
    except ParameterError as exc:
        notes.append(f"proof constants unavailable: {exc}")
    if nl.clamp_events:
        notes.append(f"negative iterates clamped to 0 before evaluating f ({nl.clamp_events} evaluations)")
    if nl.floor_events:
        notes.append(f"f evaluated at floor {EVAL_FLOOR:g} for {nl.floor_events} node values")
    return report


def _initial_guess(spec, mesh, nl, kind, value):
    if kind is InitKind.CONSTANT:
        return np.full(mesh.size, float(value))
    shape = solve_linear(GridFunction(mesh, nl.a), spec).values
    peak = np.max(np.abs(shape))
    if peak == 0:
        return np.full(mesh.size, float(value))
    return shape * (float(value) / peak)


def picard_solve(spec: ProblemSpec, opts: SolverOptions = SolverOptions()) -> SolveReport:
    cls = require_region(spec, (Region.ADMISSIBLE,), "picard_solve")
    mesh = build_mesh(spec.T, spec.eta, opts.m, opts.n)
    nl = _Nonlinearity(spec, mesh)
    u = _initial_guess(spec, mesh, nl, opts.init, opts.init_value)
    trace = []
    notes = []
    status = Status.NOT_CONVERGED
    k = 0
    for k in range(1, opts.max_iter + 1):
        try:
            Au = solve_linear(GridFunction(mesh, nl.forcing(u)), spec).values
        except ExprOverflowError as exc:
            notes.append(f"iterates diverged at iteration {k}: {exc}")
            break
        new = (1.0 - opts.damping) * u + opts.damping * Au
        update = float(np.max(np.abs(new - u)))
        scale = 1.0 + float(np.max(np.abs(u)))
        trace.append({"iter": k, "update": update, "sup_norm": float(np.max(np.abs(new)))})
        if not np.all(np.isfinite(new)):
            notes.append(f"iterates diverged at iteration {k}")
            break
        u = new
        if update <= opts.tol * scale:
            status = Status.CONVERGED
            break
    if status is Status.CONVERGED and np.max(np.abs(u)) < opts.trivial_floor:
        status = Status.TRIVIAL_LIMIT
        notes.append(f"iteration converged to the trivial solution (||u|| < {opts.trivial_floor:g})")
    elif status is Status.NOT_CONVERGED:
        notes.append(f"no convergence within {opts.max_iter} iterations")
    return _finish(spec, opts, nl, cls, GridFunction(mesh, u), status, k, opts.init_value,
                   Method.PICARD, trace, notes)


class _Collocation:
    """F(u) = L u + B y(u), with every row scaled to units of u."""

    def __init__(self, spec: ProblemSpec, mesh: Mesh):
        N = mesh.size
        m, h1, h2 = mesh.m, mesh.h1, mesh.h2
        L = np.zeros((N, N))
        B = np.zeros((N, N))
        L[0, 0] = 1.0
        L[0, m] -= spec.beta
        for i, h in ((np.arange(1, m), h1), (np.arange(m + 1, N - 1), h2)):
            L[i, i - 1] = 1.0
            L[i, i] = -2.0
            L[i, i + 1] = 1.0
            q = h * h / 4.0
            B[i, i - 1] = q
            B[i, i] = 2.0 * q
            B[i, i + 1] = q
        hh = 2.0 * h1 * h2 / (h1 + h2)
        L[m, m - 1] = hh / h1
        L[m, m] = -hh / h1 - hh / h2
        L[m, m + 1] = hh / h2
        B[m, m - 1] = hh * h1 / 4.0
        B[m, m] = hh * (h1 + h2) / 4.0
        B[m, m + 1] = hh * h2 / 4.0
        L[N - 1, N - 1] = 1.0
        L[N - 1, : m + 1] -= spec.alpha * left_panel_weights(mesh)
        self.L = L
        self.B = B

    def F(self, u, y):
        return self.L @ u + self.B @ y

    def J(self, dy):
        return self.L + self.B * dy[None, :]


def _newton_from(spec, opts, mesh, nl, system, u, start_trace):
    """Newton iteration from one start; returns (u, iterations, converged, message)."""
    F = system.F(u, nl.forcing(u))
    normF = float(np.max(np.abs(F)))
    for k in range(1, opts.max_iter + 1):
        J = system.J(nl.forcing_derivative(u))
        try:
            with np.errstate(all="raise"):
                lu = scipy.linalg.lu_factor(J, check_finite=True)
            if np.min(np.abs(np.diag(lu[0]))) == 0.0:
                raise np.linalg.LinAlgError("zero pivot")
            delta = -scipy.linalg.lu_solve(lu, F)
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            return u, k, False, f"singular Jacobian at iteration {k}: {exc}"
        if not np.all(np.isfinite(delta)):
            return u, k, False, f"singular Jacobian at iteration {k}: non-finite step"
        step_norm = float(np.max(np.abs(delta)))
        scale = 1.0 + float(np.max(np.abs(u)))
        lam = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = u + lam * delta
            try:
                F_trial = system.F(trial, nl.forcing(trial))
                norm_trial = float(np.max(np.abs(F_trial)))
            except ExprDomainError:
                norm_trial = np.inf
            if np.isfinite(norm_trial) and norm_trial < normF:
                accepted = True
                break
            lam *= 0.5
        start_trace.append({"iter": k, "residual": normF, "step": step_norm, "lambda": lam if accepted else 0.0})
        if not accepted:
            if step_norm <= opts.tol * scale:
                return u, k, True, "converged (residual at roundoff level)"
            return u, k, False, f"line search failed at iteration {k}"
        u, F, normF = trial, F_trial, norm_trial
        if lam == 1.0 and step_norm <= opts.tol * scale:
            return u, k, True, "converged"
    return u, opts.max_iter, False, f"no convergence within {opts.max_iter} iterations"


def newton_solve(spec: ProblemSpec, opts: SolverOptions = SolverOptions()) -> SolveReport:
    cls = require_region(spec, (Region.ADMISSIBLE,), "newton_solve")
    mesh = build_mesh(spec.T, spec.eta, opts.m, opts.n)
    nl = _Nonlinearity(spec, mesh)
    try:
        nl.df_expr
    except Exception as exc:
        raise ParameterError(f"f(u) = {to_text(spec.f_expr)} is not differentiable symbolically: {exc}")
    system = _Collocation(spec, mesh)
    starts = opts.multistart or (opts.init_value,)
    trace = []
    notes = []
    fallback = None
    for start in starts:
        u0 = _initial_guess(spec, mesh, nl, opts.init, start)
        start_trace = []
        try:
            u, iters, ok, message = _newton_from(spec, opts, mesh, nl, system, u0, start_trace)
        except ExprDomainError as exc:
            u, iters, ok, message = u0, 0, False, f"evaluation failed: {exc}"
        trace.append({"start": start, "iterations": iters, "message": message, "steps": start_trace})
        norm = float(np.max(np.abs(u)))
        if ok:
            F = system.F(u, nl.forcing(u))
            if float(np.max(np.abs(F))) > opts.tol * (1.0 + norm):
                ok = False
                message = "residual above tolerance"
        if not ok:
            notes.append(f"start {start:g}: {message}")
            continue
        if norm < opts.trivial_floor:
            notes.append(f"start {start:g}: converged to the trivial solution")
            fallback = fallback or (u, iters, start, Status.TRIVIAL_LIMIT)
            continue
        if float(np.min(u)) < -1e-9 * (1.0 + norm):
            notes.append(f"start {start:g}: converged to a sign-changing solution (min {np.min(u):.3e})")
            fallback = fallback or (u, iters, start, Status.NOT_CONVERGED)
            continue
        return _finish(spec, opts, nl, cls, GridFunction(mesh, u), Status.CONVERGED, iters, start,
                       Method.NEWTON, trace, notes)
    if fallback is not None:
        u, iters, start, status = fallback
    else:
        u, iters, start, status = u0, trace[-1]["iterations"], None, Status.NOT_CONVERGED
    notes.append("all starts exhausted without an acceptable positive solution")
    return _finish(spec, opts, nl, cls, GridFunction(mesh, u), status, iters, start,
                   Method.NEWTON, trace, notes)


def solve(spec: ProblemSpec, opts: SolverOptions = SolverOptions()) -> SolveReport:
    if opts.method is Method.PICARD:
        return picard_solve(spec, opts)
    return newton_solve(spec, opts)


def compare_solutions(first: SolveReport, second: SolveReport, rtol: float = 1e-6) -> dict:
    """Node-by-node agreement of two converged reports on the same mesh."""
    a, b = first.solution.values, second.solution.values
    scale = 1.0 + max(np.max(np.abs(a)), np.max(np.abs(b)))
    gap = float(np.max(np.abs(a - b)))
    agree = gap <= rtol * scale
    return {
        "max_difference": gap,
        "tolerance": rtol * scale,
        "agree": agree,
        "multiple_solutions_suspected": bool(first.converged and second.converged and not agree),
    }
