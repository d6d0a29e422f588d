"""Extrinsic geometry of an equivariant hypersurface from its generating curve.

Sign conventions: ``n`` is the tangent rotated by +90 degrees, the profile
curvature is ``kappa_prof = <T', n>`` and the orbit principal curvatures are
``kappa_j = -(d_n a_j)/a_j``.  The mean curvature is the trace
``H = kappa_prof + k (kappa_1 + kappa_2)``, where ``k`` is the dimension of
each orbit sphere (1 for tori), and vanishes exactly on solutions of the
reduced ODE.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import simpson

from .errors import DegenerateOrbit
from .fd import derivative, HALF_WIDTH
from .orbit import weight_from_radii

# samples closer to an edge than this fraction of rho belong to the edge cap
EDGE_CAP = 1.5e-4

__all__ = [
    "GeometricSample", "SampleTable", "QuantityReport", "second_fundamental_form",
    "mean_curvature_residual", "volume", "integral_A_cubed", "sup_rho_A",
    "cheng_tysk_functional", "quantity_report", "ricci_normal", "tangent_derivative",
]


def ricci_normal(kind):
    """Ric(nu, nu) of the ambient space: 3 on the unit S^4, 0 in flat space."""
    return 3.0 if kind.is_spherical else 0.0


@dataclass(frozen=True)
class GeometricSample:
    s: float
    a1: float
    a2: float
    w: float
    kappa_prof: float
    kappa1: float
    kappa2: float
    A2: float
    H_resid: float


@dataclass
class SampleTable:
    """Per-sample geometry stored as arrays; iterating yields GeometricSample."""

    kind: object
    s: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    w: np.ndarray
    kappa_prof: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    A2: np.ndarray
    H_resid: np.ndarray
    rho: np.ndarray
    h: float
    interior: np.ndarray = None
    ends: tuple = field(default=({"type": "open", "distance": 0.0},) * 2)

    def __len__(self):
        return len(self.s)

    def __getitem__(self, i):
        return GeometricSample(*(float(getattr(self, f)[i]) for f in (
            "s", "a1", "a2", "w", "kappa_prof", "kappa1", "kappa2", "A2", "H_resid")))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def ricci(self):
        return ricci_normal(self.kind)


def _ghosts(curve, values, parity, side, kappa=0.0):
    """Mirror values across an edge the curve hits perpendicularly.

    ``parity`` is a callable mapping (values, axis) to the reflected values.
    ``kappa`` is the profile curvature near the edge; it converts the distance
    to the edge into arclength (a perpendicular arc of curvature kappa covers
    distance d in arclength d + kappa^2 d^3 / 6).
    Returns ``None`` when the end is not an edge.
    """
    info = curve.meta.get("start" if side == "left" else "end", {})
    if info.get("type") != "edge":
        return None
    n = len(values)
    h = curve.h
    d = info["distance"]
    d = d + kappa * kappa * d ** 3 / 6.0
    m = min(HALF_WIDTH, n)
    if side == "left":
        edge = -d
        src = np.arange(m)[::-1]
        pos = 2 * edge - h * src
    else:
        edge = h * (n - 1) + d
        src = np.arange(n - 1, n - 1 - m, -1)
        pos = 2 * edge - h * src
    return pos, parity(values[src], info["axis"] - 1)


def tangent_derivative(curve):
    """d T / d s with edge reflections completing the stencil."""
    T = curve.T

    def refl(v, j):
        out = -v.copy()
        out[:, j] = -out[:, j]
        return out

    # one-sided pass for the end curvatures, then the ghost-completed one
    N = curve.N
    rough = derivative(T, curve.h, 1)
    k0 = float(rough[0] @ N[0])
    k1 = float(rough[-1] @ N[-1])
    return derivative(T, curve.h, 1, left=_ghosts(curve, T, refl, "left", k0),
                      right=_ghosts(curve, T, refl, "right", k1))


def second_fundamental_form(curve):
    """Per-sample curvatures, |A|^2 and the mean-curvature residual."""
    if len(curve) < 2 * HALF_WIDTH + 1:
        raise ValueError("need at least 9 samples")
    kind = curve.kind
    X, T, N = curve.X, curve.T, curve.N
    a1, a2 = np.abs(X[:, 0]), np.abs(X[:, 1])
    bad = (a1 * a2 == 0.0)
    bad[[0, -1]] = False
    if bad.any():
        raise DegenerateOrbit("interior sample on a degenerate orbit",
                              index=int(np.flatnonzero(bad)[0]))
    dT = tangent_derivative(curve)
    kp = np.einsum("ij,ij->i", dT, N)
    with np.errstate(divide="ignore", invalid="ignore"):
        k1 = np.where(a1 > 0, -N[:, 0] / a1, kp)
        k2 = np.where(a2 > 0, -N[:, 1] / a2, kp)
    k = kind.k
    A2 = kp * kp + k * (k1 * k1 + k2 * k2)
    H = kp + k * (k1 + k2)
    rho = curve.rho
    interior = np.minimum(a1, a2) >= EDGE_CAP * rho
    return SampleTable(kind, curve.s.copy(), a1, a2, weight_from_radii(a1, a2, kind),
                       kp, k1, k2, A2, H, rho, curve.h, interior,
                       (curve.meta.get("start", {"type": "open", "distance": 0.0}),
                        curve.meta.get("end", {"type": "open", "distance": 0.0})))


def _table(obj):
    return obj if isinstance(obj, SampleTable) else second_fundamental_form(obj)


def mean_curvature_residual(curve):
    """sup |H| over the samples outside the edge caps.

    Samples at the series offset from an edge are trimmed: there the
    curvature of the orbit directions is a ratio of two tiny numbers.
    """
    tab = _table(curve)
    H = np.abs(tab.H_resid)
    if tab.interior is not None and tab.interior.any():
        H = H[tab.interior]
    return float(np.max(H))


def _cap_power(info, kind):
    """Vanishing order of w at the end (0 when the curve stops in the interior)."""
    if info["type"] == "edge":
        return kind.k
    if info["type"] == "pole":
        return 2 * kind.k
    return None


def _integrate(tab, f, eps=0.0):
    """Integral of ``f`` over the curve, with end caps and an optional rho cutoff."""
    h = tab.h
    if eps <= 0.0:
        total = simpson(f, dx=h) if len(f) > 2 else np.trapezoid(f, dx=h)
        for info, fe in zip(tab.ends, (f[0], f[-1])):
            p = _cap_power(info, tab.kind)
            if p is not None:
                total += fe * info["distance"] / (p + 1)
        return float(total)
    keep = tab.rho > eps
    g = np.where(keep, f, 0.0)
    total = np.trapezoid(g, dx=h)
    # cells cut by the cutoff: keep the retained fraction at the inside value
    cut = np.flatnonzero(keep[1:] != keep[:-1])
    for j in cut:
        r0, r1 = tab.rho[j], tab.rho[j + 1]
        inside = j if keep[j] else j + 1
        frac = abs((r1 if keep[j + 1] else r0) - eps) / abs(r1 - r0)
        total += (frac - 0.5) * h * f[inside]
    return float(total)


def volume(curve):
    """Hypersurface volume, the integral of the orbit weight along the curve."""
    tab = _table(curve)
    return _integrate(tab, tab.w)


def _divergent(tab, eps):
    return eps <= 0.0 and any(e["type"] == "pole" for e in tab.ends)


def integral_A_cubed(curve, eps=0.0):
    """Integral of |A|^3 over the part of the hypersurface with rho > eps.

    Returns ``inf`` when ``eps = 0`` and the curve runs into a cone point.
    """
    tab = _table(curve)
    if _divergent(tab, eps):
        return math.inf
    return _integrate(tab, tab.A2 ** 1.5 * tab.w, eps)


def sup_rho_A(curve):
    tab = _table(curve)
    return float(np.max(tab.rho * np.sqrt(tab.A2)))


def cheng_tysk_functional(curve, eps=0.0):
    """Integral of max(V, 1)^{3/2} with V = |A|^2 + Ric(nu, nu)."""
    tab = _table(curve)
    if _divergent(tab, eps):
        return math.inf
    V = tab.A2 + tab.ricci
    return _integrate(tab, np.maximum(V, 1.0) ** 1.5 * tab.w, eps)


@dataclass
class QuantityReport:
    volume: float
    intA3: float
    supRhoA: float
    chengTysk: float
    minimality_sup: float
    divergent_flags: list = field(default_factory=list)

    def to_dict(self):
        def num(x):
            return None if not math.isfinite(x) else float(x)
        return {"volume": num(self.volume), "intA3": num(self.intA3),
                "supRhoA": num(self.supRhoA), "chengTysk": num(self.chengTysk),
                "minimalitySup": num(self.minimality_sup),
                "divergentFlags": list(self.divergent_flags)}


def quantity_report(curve, eps=0.0):
    tab = _table(curve)
    ia3 = integral_A_cubed(tab, eps)
    ct = cheng_tysk_functional(tab, eps)
    flags = [name for name, v in (("intA3", ia3), ("chengTysk", ct)) if not math.isfinite(v)]
    return QuantityReport(volume(tab), ia3, sup_rho_A(tab), ct, mean_curvature_residual(tab), flags)
