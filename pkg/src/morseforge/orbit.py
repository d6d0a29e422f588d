"""Orbit spaces of the O(2)xO(2) actions and the reduced minimality ODE.

Two orbit spaces are supported:

* the flat quadrant ``{x >= 0, y >= 0}`` of R^2m / O(m)xO(m), chart ``(x, y)``;
* the spherical lune ``{0 <= r <= pi, 0 <= omega <= pi/2}`` of S^4 / O(2)xO(2),
  chart ``(r, omega)`` with metric ``dr^2 + sin^2 r domega^2``.

Internally the lune is handled as a piece of the unit 2-sphere in R^3 through
``X = (sin r cos w, sin r sin w, cos r)``.  In that picture the two orbit radii
are simply ``X[0]`` and ``X[1]``, the central symmetry is
``(X0, X1, X2) -> (X1, X0, -X2)`` and geodesics are great circles, which keeps
all formulas free of coordinate singularities at the poles.  The flat quadrant
uses the plane in the same way.

The reduced minimality condition for a unit-speed generating curve is
``kappa_g = d_n log w`` where ``n`` is the tangent rotated by +90 degrees.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import gamma

from .errors import DegenerateOrbit

__all__ = [
    "OrbitKind", "OrbitPoint", "CurveState", "FLAT", "SPHERICAL",
    "orbit_metric_coefficients", "orbit_radii", "orbit_weight",
    "curvature_target", "minimality_rhs", "embed", "chart_point",
    "tangent_to_ambient", "tangent_to_chart", "normal_ambient",
    "state_to_ambient", "state_from_ambient", "weight_from_radii",
]


@dataclass(frozen=True)
class OrbitKind:
    """Which orbit space a curve lives in.

    ``m`` is the dimension of each factor in the flat case R^m x R^m; the
    spherical lune is always the S^4 / O(2)xO(2) quotient.
    """

    tag: str = "spherical"
    m: int = 2

    def __post_init__(self):
        if self.tag not in ("flat", "spherical"):
            raise ValueError(f"unknown orbit kind {self.tag!r}")
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.tag == "spherical" and self.m != 2:
            raise ValueError("the spherical lune is only implemented for m = 2")

    @classmethod
    def flat(cls, m=2):
        return cls("flat", m)

    @classmethod
    def spherical(cls):
        return cls("spherical", 2)

    @property
    def is_spherical(self):
        return self.tag == "spherical"

    @property
    def dim(self):
        """Ambient dimension of the picture used internally (3 or 2)."""
        return 3 if self.is_spherical else 2

    @property
    def k(self):
        """Exponent of each orbit radius in the weight, w ~ (a1 a2)^k."""
        return self.m - 1

    @property
    def weight_constant(self):
        # product of two unit (m-1)-sphere areas
        area = 2.0 * math.pi ** (self.m / 2.0) / gamma(self.m / 2.0)
        return float(area * area)

    def __str__(self):
        return "spherical" if self.is_spherical else f"flat(m={self.m})"


FLAT = OrbitKind.flat()
SPHERICAL = OrbitKind.spherical()


@dataclass(frozen=True)
class OrbitPoint:
    """Chart coordinates: ``(x, y)`` flat or ``(r, omega)`` spherical."""

    c1: float
    c2: float


@dataclass(frozen=True)
class CurveState:
    """A point of a unit-speed curve with its chart tangent and arclength."""

    point: OrbitPoint
    tangent: tuple
    s: float = 0.0


# ---------------------------------------------------------------------------
# chart <-> ambient picture

def embed(point, kind):
    """Ambient position of a chart point."""
    if kind.is_spherical:
        r, om = point.c1, point.c2
        sr = math.sin(r)
        return np.array([sr * math.cos(om), sr * math.sin(om), math.cos(r)])
    return np.array([float(point.c1), float(point.c2)])


def chart_point(X, kind):
    """Chart coordinates of an ambient position."""
    if kind.is_spherical:
        rho = math.hypot(X[0], X[1])
        return OrbitPoint(math.atan2(rho, X[2]), math.atan2(X[1], X[0]))
    return OrbitPoint(float(X[0]), float(X[1]))


def _frame(point):
    r, om = point.c1, point.c2
    e_r = np.array([math.cos(r) * math.cos(om), math.cos(r) * math.sin(om), -math.sin(r)])
    e_w = np.array([-math.sin(om), math.cos(om), 0.0])
    return e_r, e_w


def tangent_to_ambient(point, tangent, kind):
    """Ambient vector of chart components ``(dc1/ds, dc2/ds)``."""
    t1, t2 = tangent
    if kind.is_spherical:
        e_r, e_w = _frame(point)
        return t1 * e_r + t2 * math.sin(point.c1) * e_w
    return np.array([float(t1), float(t2)])


def tangent_to_chart(point, T, kind):
    """Chart components of an ambient tangent vector at ``point``."""
    if kind.is_spherical:
        e_r, e_w = _frame(point)
        sr = math.sin(point.c1)
        t2 = float(T @ e_w) / sr if sr > 0 else 0.0
        return (float(T @ e_r), t2)
    return (float(T[0]), float(T[1]))


def normal_ambient(X, T, kind):
    """Unit normal: the tangent rotated by +90 degrees in the oriented chart."""
    if kind.is_spherical:
        return np.cross(X, T)
    return np.array([-T[1], T[0]])


def state_to_ambient(state, kind):
    X = embed(state.point, kind)
    return X, tangent_to_ambient(state.point, state.tangent, kind)


def state_from_ambient(X, T, s, kind):
    p = chart_point(X, kind)
    return CurveState(p, tangent_to_chart(p, T, kind), float(s))


# ---------------------------------------------------------------------------
# the operations

def orbit_metric_coefficients(point, kind):
    """Diagonal metric coefficients ``(g11, g22)`` of the chart."""
    if kind.is_spherical:
        return 1.0, math.sin(point.c1) ** 2
    return 1.0, 1.0


def orbit_radii(point, kind):
    """Radii ``(a1, a2)`` of the two orbit circles (or spheres)."""
    if kind.is_spherical:
        sr = math.sin(point.c1)
        return abs(sr * math.cos(point.c2)), abs(sr * math.sin(point.c2))
    return float(point.c1), float(point.c2)


def weight_from_radii(a1, a2, kind):
    """Orbit volume from the radii; works elementwise on arrays."""
    return kind.weight_constant * (a1 * a2) ** kind.k


def orbit_weight(point, kind):
    """Volume of the orbit through ``point``; hypersurface volume is the integral of w ds."""
    a1, a2 = orbit_radii(point, kind)
    return weight_from_radii(a1, a2, kind)


def _target_ambient(X, n, kind):
    if X[0] <= 0.0 or X[1] <= 0.0:
        raise DegenerateOrbit("curvature target is singular on a degenerate orbit",
                              a1=float(X[0]), a2=float(X[1]))
    return kind.k * (n[0] / X[0] + n[1] / X[1])


def curvature_target(state, kind):
    """Normal logarithmic derivative of the weight, ``d_n log w``.

    A unit-speed curve generates a minimal hypersurface exactly when its
    geodesic curvature equals this value at every point.
    """
    X, T = state_to_ambient(state, kind)
    return float(_target_ambient(X, normal_ambient(X, T, kind), kind))


def minimality_rhs(state, kind):
    """Chart derivative ``((c1', c2'), (t1', t2'))`` of the reduced ODE.

    The tangent turns at rate ``kappa = d_n log w`` relative to parallel
    transport; for the lune the Levi-Civita terms of ``dr^2 + sin^2 r dw^2``
    are added, so the chart tangent keeps unit length along the exact flow.
    """
    p = state.point
    t1, t2 = state.tangent
    kap = curvature_target(state, kind)
    if kind.is_spherical:
        sr, cr = math.sin(p.c1), math.cos(p.c1)
        n1, n2 = -t2 * sr, t1 / sr
        dt1 = sr * cr * t2 * t2 + kap * n1
        dt2 = -2.0 * cr / sr * t1 * t2 + kap * n2
    else:
        n1, n2 = -t2, t1
        dt1 = kap * n1
        dt2 = kap * n2
    return (t1, t2), (dt1, dt2)
