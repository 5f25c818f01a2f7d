"""Numerical certificates for the positivity, cone, concavity and nonexistence
properties of the BVP, the existence-proof constants, and the f(u)/u limit test.

Every check returns a :class:`CheckResult` whose ``margin`` is a signed slack
(positive means the property holds with room to spare). Tolerances are relative to
``1 + ||u||`` so that scaling the forcing does not change a verdict.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import ExprDomainError, ParameterError
from .expr import Expr, eval_expr
from .grid import GridFunction, Mesh, build_mesh, integrate
from .kernel import solve_linear
from .params import ProblemSpec, Region, classify, compute_denominator, require_region

POSITIVITY_RTOL = 1e-9
CONE_RTOL = 1e-8
CONCAVITY_RTOL = 1e-8
NEGATIVITY_RTOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    tolerance: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: margin={self.margin:.3e}"


def _scale(values) -> float:
    return 1.0 + float(np.max(np.abs(values)))


# ---------------------------------------------------------------------------
# Hypotheses on a and f
# ---------------------------------------------------------------------------

def _eval_samples(expr: Expr, xs: np.ndarray):
    """Evaluate pointwise; samples outside the expression's domain become NaN."""
    try:
        return np.asarray(eval_expr(expr, xs), dtype=float), []
    except ExprDomainError:
        pass
    out = np.full(xs.shape, np.nan)
    errors = []
    for i, x in enumerate(xs):
        try:
            out[i] = eval_expr(expr, float(x))
        except ExprDomainError as exc:
            errors.append({"index": i, "x": float(x), "error": str(exc)})
    return out, errors


def check_hypotheses(spec: ProblemSpec, n_samples: int = 1001) -> CheckResult:
    """a >= 0 on [0, T], a > 0 somewhere on [eta, T], f >= 0 on sampled (0, 1e3]."""
    if spec.a_expr is None or spec.f_expr is None:
        raise ParameterError("check_hypotheses needs both a(t) and f(u)")
    t = np.linspace(0.0, spec.T, n_samples)
    us = np.logspace(-6, 3, n_samples)
    a_vals, a_err = _eval_samples(spec.a_expr, t)
    f_vals, f_err = _eval_samples(spec.f_expr, us)

    detail: dict[str, Any] = {"a_domain_errors": len(a_err), "f_domain_errors": len(f_err)}
    reasons = []
    if a_err:
        reasons.append("a(t) undefined at some sample")
        detail["a_first_error"] = a_err[0]
    a_ok = a_vals[np.isfinite(a_vals)]
    min_a = float(a_ok.min()) if a_ok.size else -math.inf
    if min_a < 0:
        i = int(np.nanargmin(a_vals))
        reasons.append("a(t) negative")
        detail["a_negative_at"] = {"t": float(t[i]), "a": float(a_vals[i])}

    tail = np.isfinite(a_vals) & (t >= spec.eta)
    max_tail = float(a_vals[tail].max()) if tail.any() else -math.inf
    if not max_tail > 0:
        reasons.append("a(t) vanishes on [eta, T]")
    detail["max_a_on_eta_T"] = max_tail

    f_ok = f_vals[np.isfinite(f_vals)]
    min_f = float(f_ok.min()) if f_ok.size else -math.inf
    if f_err:
        detail["f_first_error"] = f_err[0]
    if not f_ok.size:
        reasons.append("f(u) undefined at every sample")
    elif min_f < 0:
        i = int(np.nanargmin(f_vals))
        reasons.append("f(u) negative")
        detail["f_negative_at"] = {"u": float(us[i]), "f": float(f_vals[i])}

    margin = min(min_a, min_f)
    if not max_tail > 0:
        margin = -math.inf
    detail["reasons"] = reasons
    return CheckResult("hypotheses", not reasons, margin, 0.0, detail)


# ---------------------------------------------------------------------------
# Shape checks on a computed solution
# ---------------------------------------------------------------------------

def check_positivity(u: GridFunction) -> CheckResult:
    v = u.values
    tol = POSITIVITY_RTOL * _scale(v)
    i = int(np.argmin(v))
    margin = float(v[i]) + tol
    detail = {"min_value": float(v[i]), "at_t": float(u.nodes[i])}
    return CheckResult("positivity", margin >= 0, margin, tol, detail)


def check_cone_bound(u: GridFunction, spec: ProblemSpec) -> CheckResult:
    """min over [eta, T] of u >= gamma * max u."""
    cls = require_region(spec, (Region.ADMISSIBLE,), "check_cone_bound")
    v = u.values
    tol = CONE_RTOL * _scale(v)
    tail = v[u.mesh.m:]
    j = int(np.argmin(tail))
    lower = float(tail[j])
    bound = cls.gamma * float(v.max())
    margin = lower - bound + tol
    detail = {
        "min_on_eta_T": lower,
        "at_t": float(u.nodes[u.mesh.m + j]),
        "gamma": cls.gamma,
        "gamma_times_max": bound,
    }
    return CheckResult("cone_bound", margin >= 0, margin, tol, detail)


def second_differences(u: GridFunction) -> np.ndarray:
    """Second differences at interior nodes, in units of u (not divided by h^2).

    Junction node uses the three-point nonuniform formula scaled by the
    harmonic-mean step, which reduces to u[i-1] - 2u[i] + u[i+1] for equal steps.
    """
    v = u.values
    mesh = u.mesh
    m, h1, h2 = mesh.m, mesh.h1, mesh.h2
    d = v[:-2] - 2.0 * v[1:-1] + v[2:]
    hh = 2.0 * h1 * h2 / (h1 + h2)
    d[m - 1] = hh * ((v[m + 1] - v[m]) / h2 - (v[m] - v[m - 1]) / h1)
    return d


def check_concavity(u: GridFunction) -> CheckResult:
    d = second_differences(u)
    tol = CONCAVITY_RTOL * _scale(u.values)
    i = int(np.argmax(d))
    margin = tol - float(d[i])
    detail = {"max_second_difference": float(d[i]), "at_t": float(u.nodes[i + 1])}
    return CheckResult("concavity", margin >= 0, margin, tol, detail)


def nonexistence_probe(spec: ProblemSpec, y: GridFunction) -> CheckResult:
    """Witness that the linear solution with forcing y >= 0 is negative somewhere
    when alpha > 2T/eta^2."""
    require_region(spec, (Region.NO_POSITIVE_SOLUTION,), "nonexistence_probe")
    yv = y.values
    if np.any(yv < 0):
        raise ParameterError("nonexistence_probe needs y >= 0")
    if not integrate(y.mesh, yv, "0", "T") > 0:
        raise ParameterError("nonexistence_probe needs a nontrivial forcing (y vanishes identically)")
    u = solve_linear(y, spec)
    v = u.values
    tol = NEGATIVITY_RTOL * _scale(v)
    i = int(np.argmin(v))
    margin = -float(v[i]) - tol
    detail = {"min_value": float(v[i]), "at_t": float(u.nodes[i]), "sup_norm": u.sup_norm()}
    return CheckResult("nonexistence", margin > 0, margin, tol, detail)


# ---------------------------------------------------------------------------
# Existence-proof constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProofConstants:
    """K_sup * int_0^T T(T-s)a(s)ds = C_sup bounds ||Au|| / sup f-ratio from above;
    C_cone = gamma (2 eta / D) int_eta^T (T-s)a(s)ds bounds Au(eta) from below.

    Any slope eps <= eps_max (small-u bound on f(u)/u for the superlinear case, or the
    large-u bound for the sublinear case) and any rho >= rho_min close the argument.
    """

    K_sup: float
    C_sup: float
    eps_max: float
    C_cone: float
    rho_min: float

    def to_dict(self):
        return asdict(self)


def proof_constants(spec: ProblemSpec, mesh: Optional[Mesh] = None) -> ProofConstants:
    cls = require_region(spec, (Region.ADMISSIBLE,), "proof_constants")
    if spec.a_expr is None:
        raise ParameterError("proof_constants needs a(t)")
    if mesh is None:
        mesh = build_mesh(spec.T, spec.eta)
    T, eta, alpha, beta = spec.T, spec.eta, spec.alpha, spec.beta
    D = compute_denominator(spec)
    s = mesh.nodes
    a = np.broadcast_to(eval_expr(spec.a_expr, s), s.shape)
    whole = integrate(mesh, T * (T - s) * a, "0", "T")
    tail = integrate(mesh, (T - s) * a, "eta", "T")
    K_sup = (2.0 * (beta + 1.0) + beta * eta * (alpha * eta + 2.0) / T + alpha * beta * T) / D
    C_sup = K_sup * whole
    C_cone = cls.gamma * (2.0 * eta / D) * tail
    if not C_sup > 0:
        raise ParameterError("a(t) vanishes on [0, T]; proof constants undefined")
    if not C_cone > 0:
        raise ParameterError("a(t) must be positive somewhere on [eta, T]; cone constant C_cone is zero")
    return ProofConstants(K_sup, C_sup, 1.0 / C_sup, C_cone, 1.0 / C_cone)


# ---------------------------------------------------------------------------
# Limits of f(u)/u at 0+ and infinity
# ---------------------------------------------------------------------------

class LimitClass(str, enum.Enum):
    ZERO = "Zero"
    FINITE = "Finite"
    INFINITE = "Infinite"
    UNKNOWN = "Unknown"


class Growth(str, enum.Enum):
    SUPERLINEAR = "Superlinear"
    SUBLINEAR = "Sublinear"
    NEITHER = "Neither"


@dataclass
class LimitEstimate:
    f0_class: LimitClass
    finf_class: LimitClass
    f0_samples: list
    finf_samples: list
    verdict: Growth
    errors: list = field(default_factory=list)

    def to_dict(self):
        return {
            "f0_class": self.f0_class.value,
            "finf_class": self.finf_class.value,
            "f0_samples": self.f0_samples,
            "finf_samples": self.finf_samples,
            "verdict": self.verdict.value,
            "errors": self.errors,
        }


F0_POINTS = tuple(10.0 ** -k for k in range(3, 9))
FINF_POINTS = tuple(10.0 ** k for k in range(2, 8))


def _classify_ratios(r):
    last = r[-3:]
    if last[0] > last[1] > last[2] and last[2] < 1e-3:
        return LimitClass.ZERO
    if last[0] < last[1] < last[2] and last[2] > 1e3:
        return LimitClass.INFINITE
    return LimitClass.FINITE


def estimate_limits(f_expr: Expr) -> LimitEstimate:
    classes = []
    samples = []
    errors = []
    for points in (F0_POINTS, FINF_POINTS):
        try:
            u = np.array(points)
            r = [float(x) for x in np.asarray(eval_expr(f_expr, u)) / u]
            classes.append(_classify_ratios(r))
        except ExprDomainError as exc:
            r = []
            errors.append(str(exc))
            classes.append(LimitClass.UNKNOWN)
        samples.append(r)
    pair = tuple(classes)
    if pair == (LimitClass.ZERO, LimitClass.INFINITE):
        verdict = Growth.SUPERLINEAR
    elif pair == (LimitClass.INFINITE, LimitClass.ZERO):
        verdict = Growth.SUBLINEAR
    else:
        verdict = Growth.NEITHER
    return LimitEstimate(classes[0], classes[1], samples[0], samples[1], verdict, errors)


# ---------------------------------------------------------------------------
# Randomized property suites
# ---------------------------------------------------------------------------

def random_admissible_spec(rng: np.random.Generator) -> ProblemSpec:
    T = rng.uniform(0.5, 3.0)
    eta = rng.uniform(0.05, 0.95) * T
    alpha = rng.uniform(0.01, 0.99) * 2.0 * T / eta**2
    probe = ProblemSpec(T, eta, alpha, 0.0)
    beta = rng.uniform(0.0, 0.99) * probe.beta_bound
    return ProblemSpec(T, eta, alpha, beta)


def random_nonexistence_spec(rng: np.random.Generator) -> ProblemSpec:
    T = rng.uniform(0.5, 3.0)
    eta = rng.uniform(0.05, 0.95) * T
    alpha = rng.uniform(1.01, 5.0) * 2.0 * T / eta**2
    beta = rng.uniform(0.0, 2.0)
    return ProblemSpec(T, eta, alpha, beta)


def random_forcing(rng: np.random.Generator, mesh: Mesh, nontrivial: bool = True) -> GridFunction:
    """Nonnegative c0 + c1 s + c2 s^2 + c3 max(0, s - eta) with c_i ~ U[0, 1]."""
    s = mesh.nodes
    while True:
        c = rng.uniform(0.0, 1.0, size=4)
        y = c[0] + c[1] * s + c[2] * s**2 + c[3] * np.maximum(0.0, s - mesh.eta)
        if not nontrivial or np.any(y > 0):
            return GridFunction(mesh, y)


@dataclass
class SuiteResult:
    name: str
    samples: int
    failures: dict
    worst_margins: dict
    worst_cases: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not any(self.failures.values())

    def to_dict(self):
        return {
            "name": self.name,
            "samples": self.samples,
            "passed": self.passed,
            "failures": self.failures,
            "worst_margins": self.worst_margins,
            "worst_cases": self.worst_cases,
        }


def _record(result: SuiteResult, check: CheckResult, spec: ProblemSpec):
    if not check.passed:
        result.failures[check.name] = result.failures.get(check.name, 0) + 1
    prev = result.worst_margins.get(check.name)
    if prev is None or check.margin < prev:
        result.worst_margins[check.name] = check.margin
        result.worst_cases[check.name] = {
            "T": spec.T, "eta": spec.eta, "alpha": spec.alpha, "beta": spec.beta,
        }


def linear_shape_suite(samples: int = 200, seed: int = 0, m: int = 200, n: int = 200) -> SuiteResult:
    """Positivity, cone bound and concavity of the linear solution for random admissible
    parameters and random nonnegative forcing."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("linear_shape", samples, {"positivity": 0, "cone_bound": 0, "concavity": 0}, {})
    for _ in range(samples):
        spec = random_admissible_spec(rng)
        mesh = build_mesh(spec.T, spec.eta, m, n)
        u = solve_linear(random_forcing(rng, mesh), spec)
        for check in (check_positivity(u), check_cone_bound(u, spec), check_concavity(u)):
            _record(result, check, spec)
    return result


def nonexistence_suite(samples: int = 100, seed: int = 0, m: int = 200, n: int = 200) -> SuiteResult:
    rng = np.random.default_rng(seed)
    result = SuiteResult("nonexistence", samples, {"nonexistence": 0}, {})
    for _ in range(samples):
        spec = random_nonexistence_spec(rng)
        mesh = build_mesh(spec.T, spec.eta, m, n)
        _record(result, nonexistence_probe(spec, random_forcing(rng, mesh)), spec)
    return result


def verify_solution(u: GridFunction, spec: ProblemSpec) -> list:
    """Shape checks applicable to a computed solution of the nonlinear problem."""
    checks = [check_positivity(u), check_concavity(u)]
    if classify(spec).region is Region.ADMISSIBLE:
        checks.append(check_cone_bound(u, spec))
    return checks
