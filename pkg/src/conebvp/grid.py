"""Two-panel mesh on [0, T] joined at eta, and the quadratures the linear kernel needs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ParameterError

DEFAULT_PANELS = 200
MAX_PANELS = 4000


@dataclass(frozen=True, eq=False)
class Mesh:
    T: float
    eta: float
    m: int
    n: int
    nodes: np.ndarray

    @property
    def h1(self) -> float:
        return self.eta / self.m

    @property
    def h2(self) -> float:
        return (self.T - self.eta) / self.n

    @property
    def size(self) -> int:
        return self.m + self.n + 1

    def __eq__(self, other):
        return (
            isinstance(other, Mesh)
            and (self.T, self.eta, self.m, self.n) == (other.T, other.eta, other.m, other.n)
        )

    def __hash__(self):
        return hash((self.T, self.eta, self.m, self.n))


@dataclass(frozen=True, eq=False)
class GridFunction:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.size,):
            raise ValueError(f"expected {self.mesh.size} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def nodes(self):
        return self.mesh.nodes

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        return GridFunction(self.mesh, self.values + _values(other))

    def __sub__(self, other):
        return GridFunction(self.mesh, self.values - _values(other))

    def __mul__(self, c):
        return GridFunction(self.mesh, self.values * c)

    __rmul__ = __mul__


def _values(g):
    return g.values if isinstance(g, GridFunction) else g


def build_mesh(T: float, eta: float, m: int = DEFAULT_PANELS, n: int = DEFAULT_PANELS) -> Mesh:
    if not 0.0 < eta < T:
        raise ParameterError(f"need 0 < eta < T, got eta={eta}, T={T}")
    for name, k in (("m", m), ("n", n)):
        if isinstance(k, bool) or int(k) != k:
            raise ParameterError(f"{name} must be an integer, got {k!r}")
        if k < 2 or k % 2:
            raise ParameterError(f"{name} must be even and >= 2, got {k}")
        if k > MAX_PANELS:
            raise ParameterError(f"{name} exceeds the per-panel maximum {MAX_PANELS}")
    m, n = int(m), int(n)
    h1 = eta / m
    h2 = (T - eta) / n
    left = np.arange(m + 1) * h1
    right = eta + np.arange(1, n + 1) * h2
    nodes = np.concatenate([left, right])
    nodes[m] = eta
    nodes[-1] = T
    nodes.flags.writeable = False
    return Mesh(float(T), float(eta), m, n, nodes)


def sample(mesh: Mesh, fn) -> GridFunction:
    return GridFunction(mesh, np.broadcast_to(fn(mesh.nodes), mesh.nodes.shape))


def simpson_weights(k: int, h: float) -> np.ndarray:
    """Composite Simpson weights for k (even) uniform subintervals of width h."""
    w = np.full(k + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def left_panel_weights(mesh: Mesh) -> np.ndarray:
    """Simpson weights on [0, eta] (nodes 0..m)."""
    return simpson_weights(mesh.m, mesh.h1)


def right_panel_weights(mesh: Mesh) -> np.ndarray:
    """Simpson weights on [eta, T] (nodes m..m+n)."""
    return simpson_weights(mesh.n, mesh.h2)


def full_weights(mesh: Mesh) -> np.ndarray:
    """Panel-Simpson weights on [0, T]; the two panels share node m."""
    w = np.zeros(mesh.size)
    w[: mesh.m + 1] += left_panel_weights(mesh)
    w[mesh.m:] += right_panel_weights(mesh)
    return w


def integrate(mesh: Mesh, values, lower: str = "0", upper: str = "T") -> float:
    """Panel-Simpson integral over [0, eta], [eta, T] or [0, T]."""
    v = np.asarray(_values(values), dtype=float)
    span = (lower, upper)
    if span == ("0", "eta"):
        return float(left_panel_weights(mesh) @ v[: mesh.m + 1])
    if span == ("eta", "T"):
        return float(right_panel_weights(mesh) @ v[mesh.m:])
    if span == ("0", "T"):
        return float(full_weights(mesh) @ v)
    raise ValueError(f"unsupported integration span {span}")


def moments(y: GridFunction):
    """Simpson approximations of

        I1 = int_0^eta (eta - s) y(s) ds,
        I2 = int_0^eta (eta - s)^2 y(s) ds,
        I3 = int_0^T (T - s) y(s) ds.
    """
    mesh = y.mesh
    s = mesh.nodes
    v = y.values
    d = mesh.eta - s
    I1 = integrate(mesh, d * v, "0", "eta")
    I2 = integrate(mesh, d * d * v, "0", "eta")
    I3 = integrate(mesh, (mesh.T - s) * v, "0", "T")
    return I1, I2, I3


def double_cumulative(y: GridFunction) -> GridFunction:
    """V(t) = int_0^t (t - s) y(s) ds at every node.

    Uses V'(t) = int_0^t y: two cumulative trapezoid passes, second order.
    """
    s = y.mesh.nodes
    W = cumulative_trapezoid(y.values, s, initial=0.0)
    V = cumulative_trapezoid(W, s, initial=0.0)
    return GridFunction(y.mesh, V)
