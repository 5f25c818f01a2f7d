"""Unique solution of the linear problem u'' + y = 0 with u(0) = beta u(eta),
u(T) = alpha int_0^eta u.

The solution is rebuilt as u(t) = u(0) + u'(0) t - V(t) with V(t) = int_0^t (t-s) y(s) ds.
u(0) and u'(0) come from the closed-form solve of the two boundary conditions, fed with
moments taken from the same discrete V, so the discrete boundary conditions hold to
roundoff for any y (not only up to quadrature error).
"""

from __future__ import annotations

from dataclasses import dataclass


from .grid import GridFunction, double_cumulative, integrate
from .params import ProblemSpec, Region, compute_denominator, require_region

_SOLVABLE = (Region.ADMISSIBLE, Region.NO_POSITIVE_SOLUTION, Region.OUTSIDE_THEORY)


@dataclass(frozen=True)
class InitialData:
    u0: float
    du0: float


def initial_data_from_moments(spec: ProblemSpec, I1: float, I2: float, I3: float) -> InitialData:
    """u(0), u'(0) given I1 = int_0^eta (eta-s)y, I2 = int_0^eta (eta-s)^2 y, I3 = int_0^T (T-s)y."""
    T, eta, alpha, beta = spec.T, spec.eta, spec.alpha, spec.beta
    D = compute_denominator(spec)
    u0 = (2.0 * beta * eta * I3 - beta * (2.0 * T - alpha * eta**2) * I1 - alpha * beta * eta * I2) / D
    du0 = (
        2.0 * (1.0 - beta) * I3 - alpha * (1.0 - beta) * I2 + 2.0 * beta * (1.0 - alpha * eta) * I1
    ) / D
    return InitialData(float(u0), float(du0))


def kernel_moments(y: GridFunction, V: GridFunction | None = None):
    """(I1, I2, I3) read off the discrete V: V(eta), 2 int_0^eta V, V(T).

    These are the identities behind the boundary-condition solve
    (int_0^eta V = 1/2 int_0^eta (eta-s)^2 y).
    """
    if V is None:
        V = double_cumulative(y)
    mesh = y.mesh
    return (
        float(V.values[mesh.m]),
        2.0 * integrate(mesh, V.values, "0", "eta"),
        float(V.values[-1]),
    )


def initial_data(y: GridFunction, spec: ProblemSpec) -> InitialData:
    require_region(spec, _SOLVABLE, "initial_data")
    return initial_data_from_moments(spec, *kernel_moments(y))


def solve_linear(y: GridFunction, spec: ProblemSpec) -> GridFunction:
    require_region(spec, _SOLVABLE, "solve_linear")
    V = double_cumulative(y)
    init = initial_data_from_moments(spec, *kernel_moments(y, V))
    t = y.mesh.nodes
    return GridFunction(y.mesh, init.u0 + init.du0 * t - V.values)


def closed_form_value(spec: ProblemSpec, t: float, I1: float, I2: float, I3: float, Vt: float) -> float:
    """The four-term solution display evaluated at a single t, with D > 0 signs.

    ``Vt`` is int_0^t (t-s) y(s) ds.
    """
    T, eta, alpha, beta = spec.T, spec.eta, spec.alpha, spec.beta
    D = compute_denominator(spec)
    c1 = (2.0 * beta * (1.0 - alpha * eta) * t - beta * (2.0 * T - alpha * eta**2)) / D
    c2 = (alpha * (beta - 1.0) * t - alpha * beta * eta) / D
    c3 = (2.0 * beta * eta - 2.0 * (beta - 1.0) * t) / D
    return c1 * I1 + c2 * I2 + c3 * I3 - Vt


def boundary_residuals(u: GridFunction, spec: ProblemSpec):
    """(|u(0) - beta u(eta)|, |u(T) - alpha * Simpson(u, [0, eta])|)."""
    v = u.values
    m = u.mesh.m
    bc0 = abs(v[0] - spec.beta * v[m])
    bcT = abs(v[-1] - spec.alpha * integrate(u.mesh, v, "0", "eta"))
    return float(bc0), float(bcT)

