"""Parameter regions of the three-point integral BVP

    u''(t) + a(t) f(u(t)) = 0,   0 < t < T,
    u(0) = beta u(eta),   u(T) = alpha * int_0^eta u(s) ds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ParameterError
from .expr import Expr, parse_expr

DEGENERACY_RTOL = 1e-12


class Region(str, enum.Enum):
    ADMISSIBLE = "Admissible"
    NO_POSITIVE_SOLUTION = "NoPositiveSolutionRegion"
    DENOMINATOR_DEGENERATE = "DenominatorDegenerate"
    OUTSIDE_THEORY = "OutsideTheory"


@dataclass(frozen=True)
class ProblemSpec:
    """One BVP instance. ``a_expr``/``f_expr`` accept AST nodes or source text."""

    T: float
    eta: float
    alpha: float
    beta: float
    a_expr: Optional[Expr] = None
    f_expr: Optional[Expr] = None

    def __post_init__(self):
        for name in ("T", "eta", "alpha", "beta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not 0.0 < self.eta < self.T:
            raise ParameterError(f"need 0 < eta < T, got eta={self.eta}, T={self.T}")
        if self.alpha <= 0.0:
            raise ParameterError(f"need alpha > 0, got {self.alpha}")
        if self.beta < 0.0:
            raise ParameterError(f"need beta >= 0, got {self.beta}")
        if isinstance(self.a_expr, str):
            object.__setattr__(self, "a_expr", parse_expr(self.a_expr, "t"))
        if isinstance(self.f_expr, str):
            object.__setattr__(self, "f_expr", parse_expr(self.f_expr, "u"))

    @property
    def alpha_bound(self) -> float:
        return 2.0 * self.T / self.eta**2

    @property
    def beta_bound(self) -> float:
        T, eta, alpha = self.T, self.eta, self.alpha
        return (2.0 * T - alpha * eta**2) / (alpha * eta**2 - 2.0 * eta + 2.0 * T)

    def with_functions(self, a, f) -> "ProblemSpec":
        return ProblemSpec(self.T, self.eta, self.alpha, self.beta, a, f)


@dataclass(frozen=True)
class ParamClassification:
    region: Region
    D: float
    alpha_bound: float
    beta_bound: float
    gamma: Optional[float] = None
    gamma_terms: tuple = field(default=(), compare=False)

    def to_dict(self):
        return {
            "region": self.region.value,
            "D": self.D,
            "alpha_bound": self.alpha_bound,
            "beta_bound": self.beta_bound,
            "gamma": self.gamma,
            "gamma_terms": list(self.gamma_terms),
        }


def compute_denominator(spec: ProblemSpec) -> float:
    """D = (2T - alpha eta^2) - beta (alpha eta^2 - 2 eta + 2T).

    This is the negation of the determinant form (alpha eta^2 - 2T) - beta(2 eta - alpha eta^2 - 2T)
    that appears when the boundary conditions are solved for u(0), u'(0); D > 0 exactly on
    the admissible region.
    """
    T, eta, alpha, beta = spec.T, spec.eta, spec.alpha, spec.beta
    return (2 * T - alpha * eta**2) - beta * (alpha * eta**2 - 2 * eta + 2 * T)


def _gamma_terms(spec):
    T, eta, alpha, beta = spec.T, spec.eta, spec.alpha, spec.beta
    k = alpha * (beta + 1.0)
    return (
        eta / T,
        k * eta**2 / (2.0 * T),
        k * eta * (T - eta) / (2.0 * T - k * eta**2),
    )


def classify(spec: ProblemSpec) -> ParamClassification:
    D = compute_denominator(spec)
    alpha_bound = spec.alpha_bound
    beta_bound = spec.beta_bound
    scale = 1.0 + abs(2.0 * spec.T - spec.alpha * spec.eta**2)
    if abs(D) <= DEGENERACY_RTOL * scale:
        region = Region.DENOMINATOR_DEGENERATE
    elif spec.alpha > alpha_bound:
        region = Region.NO_POSITIVE_SOLUTION
    elif spec.alpha < alpha_bound and spec.beta < beta_bound:
        region = Region.ADMISSIBLE
    else:
        region = Region.OUTSIDE_THEORY
    if region is Region.ADMISSIBLE:
        terms = _gamma_terms(spec)
        return ParamClassification(region, D, alpha_bound, beta_bound, min(terms), terms)
    return ParamClassification(region, D, alpha_bound, beta_bound)


def cone_gamma(spec: ProblemSpec) -> float:
    """Cone constant: min of eta/T, alpha(beta+1)eta^2/2T and
    alpha(beta+1)eta(T-eta)/(2T - alpha(beta+1)eta^2)."""
    region = classify(spec).region
    if region is not Region.ADMISSIBLE:
        raise ParameterError(f"cone constant is defined on the Admissible region only, spec is {region.value}")
    return min(_gamma_terms(spec))


def require_region(spec: ProblemSpec, allowed, what: str) -> ParamClassification:
    cls = classify(spec)
    if cls.region is Region.DENOMINATOR_DEGENERATE:
        raise ParameterError(
            f"{what}: beta = {spec.beta!r} equals the excluded value "
            f"(2T - alpha eta^2)/(alpha eta^2 - 2 eta + 2T) = {cls.beta_bound!r}; "
            "the linear problem has no unique solution (D = 0)"
        )
    if cls.region not in allowed:
        names = ", ".join(r.value for r in allowed)
        raise ParameterError(f"{what}: requires region in {{{names}}}, spec is {cls.region.value}")
    return cls
