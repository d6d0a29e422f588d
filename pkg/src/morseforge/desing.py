"""Desingularizing the football: coarse interpolation, conformal mean curvature, Picard.

The interpolated profile lives on the spherical lune.  Near the north pole it
is built in normal coordinates ``F`` (the flat quadrant, ``|F|`` = distance to
the pole) from three pieces:

* the cap, ``eta1`` times the embedded Alencar curve, while its projection on
  the bisector ray is below ``eta2/2``;
* the annulus ``eta2/2 <= t <= eta2``, where the Alencar curve is written as a
  graph ``g`` over the ray and the graph is cut off smoothly,
  ``F = t e + xi(t) eta1 g(t/eta1) e_perp``;
* the football body, the ray itself, up to the center of the lune.

The exponential map at the pole carries ``F`` to the sphere and the south half
is the central mirror image.  Samples sit at uniform arclength on a half-cell
grid, so both edge points are cell faces and reflection ghosts stay uniform.

Graphs are normal graphs along geodesics, ``P = cos(u) X + sin(u) n``.  The
conformal mean curvature is
``M(u) = Q^(-1/2) (H(u) + 1/2 d_nu log Q)`` with ``Q = (1 + B s u / rho^2)^2``
in Fermi coordinates ``(z, s)`` and ``H`` the trace of the second fundamental
form, so that its linearization at 0 is ``J v + B v / rho^2``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from . import _kernels as K
from .conifold import weighted_sup_norm
from .errors import ConformalBlowup, ContractionFailure, GraphFailure, NotCoercive
from .fd import derivative, HALF_WIDTH
from .orbit import FLAT, SPHERICAL
from .shooting import ProfileCurve, central_mirror, profile_from_edge, football_meridian

__all__ = [
    "DesingProfile", "PicardState", "QuinticHermite", "alencar_cap", "interpolate_profile",
    "football_body", "smooth_step", "conformal_factor", "conformal_mean_curvature", "graph_positions",
    "jacobi_operator", "linearization", "linearized_operator", "TridiagonalOperator",
    "coercivity_parameters", "picard_solve", "quadratic_remainder_bound",
    "recompute_conformal_mean_curvature", "norm1", "norm2", "Q_RANGE", "Q_BETA", "Q_REG",
]

E_RAY = np.array([1.0, 1.0]) / math.sqrt(2.0)
E_PERP = np.array([-1.0, 1.0]) / math.sqrt(2.0)
Q_RANGE = 0.5
Q_REG = 3
Q_BETA = 2.1
# difference stencils step about this fraction of rho, keeping round-off of
# second differences well below the linearization tolerances
STENCIL_FRACTION = 0.005
KNOT_FRACTION = 0.01
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# interpolation helpers

class QuinticHermite:
    """Piecewise quintic Hermite curve through values, first and second derivatives."""

    # basis coefficients in powers t^0..t^5 for p0, m0, c0, c1, m1, p1
    _B = np.array([
        [1, 0, 0, -10, 15, -6],
        [0, 1, 0, -6, 8, -3],
        [0, 0, 0.5, -1.5, 1.5, -0.5],
        [0, 0, 0, 0.5, -1, 0.5],
        [0, 0, 0, -4, 7, -3],
        [0, 0, 0, 10, -15, 6],
    ], dtype=float)

    def __init__(self, knots, p, m, c):
        self.knots = np.asarray(knots, dtype=float)
        self.p, self.m, self.c = (np.asarray(a, dtype=float) for a in (p, m, c))

    def interval(self, x):
        return np.clip(np.searchsorted(self.knots, x, side="right") - 1, 0, len(self.knots) - 2)

    def __call__(self, x, idx=None):
        """Values and the first two derivatives at ``x`` (arrays)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.interval(x) if idx is None else idx
        H = (self.knots[k + 1] - self.knots[k])[:, None]
        t = ((x - self.knots[k])[:, None]) / H
        pw = np.stack([t ** j for j in range(6)], axis=-1)[:, 0, :]
        d1 = np.zeros_like(pw)
        d2 = np.zeros_like(pw)
        for j in range(1, 6):
            d1[:, j] = j * t[:, 0] ** (j - 1)
        for j in range(2, 6):
            d2[:, j] = j * (j - 1) * t[:, 0] ** (j - 2)
        coef = np.stack([self.p[k], H * self.m[k], H * H * self.c[k],
                         H * H * self.c[k + 1], H * self.m[k + 1], self.p[k + 1]], axis=1)
        b0, b1, b2 = pw @ self._B.T, d1 @ self._B.T, d2 @ self._B.T
        val = np.einsum("nj,njd->nd", b0, coef)
        der = np.einsum("nj,njd->nd", b1, coef) / H
        dd = np.einsum("nj,njd->nd", b2, coef) / (H * H)
        return val, der, dd


def smooth_step(y):
    """``S(y)`` equal to 1 for ``y <= 0``, 0 for ``y >= 1``, C-infinity; with S', S''."""
    y = np.asarray(y, dtype=float)

    def psi(x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
            d1 = np.where(x > 0, v / np.where(x > 0, x, 1.0) ** 2, 0.0)
            d2 = np.where(x > 0, v * (1 - 2 * x) / np.where(x > 0, x, 1.0) ** 4, 0.0)
        return v, d1, d2

    a, a1, a2 = psi(1.0 - y)
    a1 = -a1
    b, b1, b2 = psi(y)
    s = a + b
    S = a / s
    N = a1 * b - a * b1
    S1 = N / s ** 2
    N1 = a2 * b - a * b2
    S2 = (N1 * s - 2 * N * (a1 + b1)) / s ** 3
    return S, S1, S2


# ---------------------------------------------------------------------------
# the Alencar cap

@dataclass
class AlencarCap:
    """Quintic Hermite model of the embedded Alencar curve, edge point at tau = 0."""

    herm: QuinticHermite
    curve: ProfileCurve

    @property
    def proj(self):
        return self.herm.p @ E_RAY

    def graph_range(self, T0):
        """Parameter where the projection on the ray reaches ``T0`` for good.

        Raises GraphFailure when the curve is not a graph over the ray beyond
        that projection.
        """
        pr = self.proj
        dp = self.herm.m @ E_RAY
        above = np.flatnonzero(pr >= T0)
        if len(above) == 0:
            raise ValueError("cap curve too short for the requested annulus")
        i0 = int(above[0])
        if i0 <= 1 or np.any(pr[i0:] < T0) or np.any(dp[i0 - 1:] <= 0.0):
            raise GraphFailure("cap is not a graph over the bisector ray on the annulus",
                               projection=float(T0))
        return self._solve_proj(np.array([T0]))[0]

    def _solve_proj(self, T):
        pr = self.proj
        k = np.clip(np.searchsorted(pr, T) - 1, 0, len(pr) - 2)
        # monotone part: interpolate then Newton on the Hermite pieces
        kn = self.herm.knots
        tau = kn[k] + (T - pr[k]) / (pr[k + 1] - pr[k]) * (kn[k + 1] - kn[k])
        for _ in range(8):
            v, d, _ = self.herm(tau)
            tau = tau - (v @ E_RAY - T) / (d @ E_RAY)
        return tau

    def graph(self, T):
        """Signed offset ``g(T)`` from the ray and its first two derivatives."""
        tau = self._solve_proj(np.asarray(T, dtype=float))
        v, d, dd = self.herm(tau)
        a, b = d @ E_RAY, d @ E_PERP
        a2, b2 = dd @ E_RAY, dd @ E_PERP
        return v @ E_PERP, b / a, (b2 * a - b * a2) / a ** 3


def alencar_cap(reach=60.0, h=1e-3):
    """Integrate the embedded Alencar curve until its projection passes ``reach``."""
    curve = profile_from_edge(1.0, FLAT, h, s_max=reach * 1.1 + 10.0)
    X, T = curve.X, curve.T
    N = np.stack([-T[:, 1], T[:, 0]], axis=1)
    kap = N[:, 0] / X[:, 0] + N[:, 1] / X[:, 1]
    C = kap[:, None] * N
    # knots about KNOT_FRACTION * |sigma| apart: finer spacing lets round-off in
    # the samples dominate the second derivative of the interpolant
    r = np.linalg.norm(X, axis=1)
    keep = [0]
    while keep[-1] < len(X) - 1:
        j = keep[-1]
        keep.append(min(len(X) - 1, j + max(1, int(KNOT_FRACTION * r[j] / h))))
    keep = np.array(keep)
    X, T, C = X[keep], T[keep], C[keep]
    # ghost sample mirrored across the edge so that tau = 0 is inside a piece
    R = np.array([1.0, -1.0])
    s = curve.s[keep]
    knots = np.concatenate([[-s[0]], s])
    P = np.vstack([X[0] * R, X])
    M = np.vstack([-(T[0] * R), T])
    Cc = np.vstack([C[0] * R, C])
    return AlencarCap(QuinticHermite(knots, P, M, Cc), curve)


# ---------------------------------------------------------------------------
# normal coordinates at the north pole

def _sinc_terms(m):
    """``phi(m) = sin(sqrt m)/sqrt m`` with its first two m-derivatives."""
    m = np.asarray(m, dtype=float)
    small = m < 1e-2
    ms = np.where(small, m, 0.0)
    phi_s = np.zeros_like(m)
    d1_s = np.zeros_like(m)
    d2_s = np.zeros_like(m)
    for k in range(12):
        c = (-1.0) ** k / math.factorial(2 * k + 1)
        phi_s += c * ms ** k
        if k >= 1:
            d1_s += c * k * ms ** (k - 1)
        if k >= 2:
            d2_s += c * k * (k - 1) * ms ** (k - 2)
    l = np.sqrt(np.where(small, 1.0, m))
    sl, cl = np.sin(l), np.cos(l)
    phi_l = sl / l
    d1_l = (l * cl - sl) / (2 * l ** 3)
    dd = (-2 * l ** 4 * sl - 6 * l ** 2 * (l * cl - sl)) / (4 * l ** 6)
    d2_l = dd / (2 * l)
    return (np.where(small, phi_s, phi_l), np.where(small, d1_s, d1_l),
            np.where(small, d2_s, d2_l))


def _to_sphere(F, F1, F2):
    """Exponential map at the north pole with the first two derivatives along a curve."""
    m = np.einsum("ij,ij->i", F, F)
    m1 = 2 * np.einsum("ij,ij->i", F, F1)
    m2 = 2 * (np.einsum("ij,ij->i", F1, F1) + np.einsum("ij,ij->i", F, F2))
    phi, p1, p2 = _sinc_terms(m)
    l = np.sqrt(m)
    Xh = F * phi[:, None]
    Xh1 = F1 * phi[:, None] + F * (p1 * m1)[:, None]
    Xh2 = (F2 * phi[:, None] + 2 * F1 * (p1 * m1)[:, None]
           + F * (p2 * m1 ** 2 + p1 * m2)[:, None])
    Xv = np.cos(l)
    Xv1 = -0.5 * phi * m1
    Xv2 = -0.5 * (p1 * m1 ** 2 + phi * m2)
    X = np.column_stack([Xh, Xv])
    X1 = np.column_stack([Xh1, Xv1])
    X2 = np.column_stack([Xh2, Xv2])
    return X, X1, X2


class _Segment:
    """A parametrized piece of the north half with an arclength table."""

    def __init__(self, evaluate, a, b, breaks):
        self.evaluate = evaluate
        self.a, self.b = a, b
        self.breaks = np.asarray(breaks, dtype=float)
        lo, hi = self.breaks[:-1], self.breaks[1:]
        self.cum = np.concatenate([[0.0], np.cumsum(self._gauss(lo, hi))])
        self.length = float(self.cum[-1])

    def speed(self, p):
        F, F1, F2 = self.evaluate(p)
        _, X1, _ = _to_sphere(F, F1, F2)
        return np.linalg.norm(X1, axis=1)

    def _gauss(self, lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        sp = self.speed(nodes.ravel()).reshape(nodes.shape)
        return half * (sp @ _GL_W)

    def invert(self, s):
        """Parameters at arclength ``s`` measured from the segment start."""
        s = np.asarray(s, dtype=float)
        k = np.clip(np.searchsorted(self.cum, s, side="right") - 1, 0, len(self.breaks) - 2)
        lo, hi = self.breaks[k], self.breaks[k + 1]
        frac = (s - self.cum[k]) / (self.cum[k + 1] - self.cum[k])
        p = lo + frac * (hi - lo)
        for _ in range(6):
            S = self.cum[k] + self._gauss(lo, p)
            p = p - (S - s) / self.speed(p)
        return p


# ---------------------------------------------------------------------------
# profiles

@dataclass
class DesingProfile:
    """A profile on the lune with analytic curvature data at every sample."""

    eta1: float
    eta2: float
    curve: ProfileCurve
    blend: np.ndarray
    rho: np.ndarray
    X: np.ndarray = field(repr=False, default=None)
    T: np.ndarray = field(repr=False, default=None)
    kappa: np.ndarray = field(repr=False, default=None)
    edges: bool = True

    def __post_init__(self):
        X, T = self.X, self.T
        self.h = self.curve.h
        self.n = np.cross(X, T)
        self.a1, self.a2 = X[:, 0], X[:, 1]
        self.k1 = -self.n[:, 0] / self.a1
        self.k2 = -self.n[:, 1] / self.a2
        self.A2 = self.kappa ** 2 + self.k1 ** 2 + self.k2 ** 2
        self.H0 = self.kappa + self.k1 + self.k2
        self.wlog = T[:, 0] / self.a1 + T[:, 1] / self.a2
        self.drho = (X[:, 0] * T[:, 0] + X[:, 1] * T[:, 1]) / self.rho
        self.w = SPHERICAL.weight_constant * self.a1 * self.a2
        self.stride = np.maximum(1, np.round(STENCIL_FRACTION * self.rho / self.h)).astype(int)
        self.dkappa = self.deriv(self.kappa, 1)

    def __len__(self):
        return len(self.rho)

    def _ghosts(self, values, parity):
        """Reflection ghosts across the edges, which sit half a cell outside."""
        if not self.edges:
            return None, None
        n, h, m = len(values), self.h, HALF_WIDTH
        j = np.arange(m)
        left = (-h * (j + 1)[::-1], parity * values[j][::-1])
        right = (h * (n + j), parity * values[n - 1 - j])
        return left, right

    def deriv(self, values, order=1, parity=1.0):
        left, right = self._ghosts(values, parity)
        return derivative(values, self.h, order, left=left, right=right, spacing=self.stride)

    def ghost_fn(self, parity=1.0):
        """Ghost generator for the ``j``-th derivative of a function of given parity."""
        def g(d, j):
            return self._ghosts(d, parity * (-1.0) ** j)
        return g

    @property
    def region(self):
        """0 in the cap, 1 in the annulus, 2 on the football body."""
        r = np.full(len(self), 1)
        r[self.blend >= 1.0] = 0
        r[self.blend <= 0.0] = 2
        return r


def interpolate_profile(cap, eta1, eta2, h=1e-5):
    """Coarse interpolation of the football with ``eta1``-scaled caps at both poles.

    ``cap`` is an :class:`AlencarCap` (see :func:`alencar_cap`); it must reach a
    projection of ``eta2/eta1`` on the bisector ray.
    """
    if not 0 < eta1 < eta2 <= 0.3:
        raise ValueError("need 0 < eta1 < eta2 <= 0.3")
    T0, T1 = 0.5 * eta2 / eta1, eta2 / eta1
    if cap.proj[-1] < T1:
        raise ValueError("cap curve too short for the requested annulus",)
    tau_c = cap.graph_range(T0)

    def seg_cap(tau):
        v, d, dd = cap.herm(tau)
        return eta1 * v, eta1 * d, eta1 * dd

    def seg_blend(t):
        g, g1, g2 = cap.graph(t / eta1)
        S, S1, S2 = smooth_step((t - 0.5 * eta2) / (0.5 * eta2))
        S1, S2 = S1 / (0.5 * eta2), S2 / (0.5 * eta2) ** 2
        d = S * eta1 * g
        d1 = S1 * eta1 * g + S * g1
        d2 = S2 * eta1 * g + 2 * S1 * g1 + S * g2 / eta1
        F = t[:, None] * E_RAY + d[:, None] * E_PERP
        F1 = E_RAY + d1[:, None] * E_PERP
        F2 = d2[:, None] * E_PERP
        return F, F1, F2

    kn = cap.herm.knots
    kb = kn[(kn > 0.0) & (kn < tau_c)]
    segA = _Segment(seg_cap, 0.0, tau_c, np.concatenate([[0.0], kb, [tau_c]]))
    nb = int(max(400, math.ceil((T1 - T0) / 0.05)))
    segB = _Segment(seg_blend, 0.5 * eta2, eta2, np.linspace(0.5 * eta2, eta2, nb + 1))
    lenC = 0.5 * math.pi - eta2
    half = segA.length + segB.length + lenC
    L = 2.0 * half
    N = int(round(L / h))
    hh = L / N
    s = (np.arange(N) + 0.5) * hh
    nh = (N + 1) // 2
    sh = s[:nh]
    X = np.empty((nh, 3))
    X1 = np.empty((nh, 3))
    X2 = np.empty((nh, 3))
    xi = np.empty(nh)
    inA = sh < segA.length
    inB = (~inA) & (sh < segA.length + segB.length)
    inC = ~(inA | inB)
    for sel, seg, off in ((inA, segA, 0.0), (inB, segB, segA.length)):
        if sel.any():
            p = seg.invert(sh[sel] - off)
            Xs, D1, D2 = _to_sphere(*seg.evaluate(p))
            X[sel], X1[sel], X2[sel] = Xs, D1, D2
            xi[sel] = 1.0 if seg is segA else smooth_step((p - 0.5 * eta2) / (0.5 * eta2))[0]
    if inC.any():
        t = eta2 + (sh[inC] - segA.length - segB.length)
        F = t[:, None] * E_RAY
        Xs, D1, D2 = _to_sphere(F, np.tile(E_RAY, (len(t), 1)), np.zeros_like(F))
        X[inC], X1[inC], X2[inC] = Xs, D1, D2
        xi[inC] = 0.0
    sp = np.linalg.norm(X1, axis=1)
    Th = X1 / sp[:, None]
    kap = np.einsum("ij,ij->i", X2, np.cross(X, X1)) / sp ** 3
    # south half: central mirror, traversed backwards
    jj = np.arange(N - nh - 1, -1, -1)
    Xf = np.vstack([X, central_mirror(X[jj])])
    Tf = np.vstack([Th, -central_mirror(Th[jj])])
    kf = np.concatenate([kap, -kap[jj]])
    xf = np.concatenate([xi, xi[jj]])
    meta = {"construction": "interpolated", "eta1": eta1, "eta2": eta2,
            "start": {"type": "edge", "axis": 2, "distance": 0.5 * hh},
            "end": {"type": "edge", "axis": 1, "distance": 0.5 * hh}}
    curve = ProfileCurve.from_ambient(SPHERICAL, Xf, Tf, s[0], hh, meta)
    rho = np.hypot(Xf[:, 0], Xf[:, 1])
    return DesingProfile(eta1, eta2, curve, xf, rho, Xf, Tf, kf, edges=True)


def football_body(h=1e-4, r_start=None):
    """The football meridian as a profile (pole ends, zero curvature)."""
    curve = football_meridian(h, r_start)
    X, T = curve.X, curve.T
    rho = np.hypot(X[:, 0], X[:, 1])
    return DesingProfile(0.0, 0.0, curve, np.zeros(len(X)), rho, X, T,
                         np.zeros(len(X)), edges=False)


# ---------------------------------------------------------------------------
# conformal mean curvature of normal graphs

def _check_u(profile, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (len(profile),):
        raise ValueError("u must have one value per profile sample")
    return u


def graph_positions(profile, u):
    """Ambient points ``cos(u) X + sin(u) n`` of the normal graph."""
    u = _check_u(profile, u)
    return np.cos(u)[:, None] * profile.X + np.sin(u)[:, None] * profile.n


def _graph_geometry(profile, u):
    X, T, n, kap = profile.X, profile.T, profile.n, profile.kappa
    u1 = profile.deriv(u, 1)
    u2 = profile.deriv(u, 2)
    c, s = np.cos(u), np.sin(u)
    J = c - kap * s
    J1 = -u1 * s - profile.dkappa * s - kap * c * u1
    W2 = J * J + u1 * u1
    kP = (W2 * (kap * c + s) + J * u2 - u1 * J1) / W2 ** 1.5
    P = c[:, None] * X + s[:, None] * n
    Nu = c[:, None] * n - s[:, None] * X
    dP = J[:, None] * T + u1[:, None] * Nu
    nu = np.cross(P, dP) / np.sqrt(W2)[:, None]
    H = kP - nu[:, 0] / P[:, 0] - nu[:, 1] / P[:, 1]
    return u1, J, H


def conformal_factor(profile, u, s, B):
    """``Q(u)(z, s) = (1 + B s u(z) / rho(z)^2)^2`` at signed normal distance ``s``."""
    u = _check_u(profile, u)
    return (1.0 + B * np.asarray(s) * u / profile.rho ** 2) ** 2


def conformal_mean_curvature(profile, u, B):
    """``Q^(-1/2) (H + 1/2 d_nu log Q)`` along the graph of ``u``."""
    u = _check_u(profile, u)
    u1, J, H = _graph_geometry(profile, u)
    rho = profile.rho
    Fq = B * u * u / rho ** 2
    if np.any(np.abs(Fq) > Q_RANGE):
        j = int(np.argmax(np.abs(Fq)))
        raise ConformalBlowup("conformal factor left its admissible range",
                              index=j, value=float((1 + Fq[j]) ** 2))
    ur = u / rho ** 2
    ur1 = u1 / rho ** 2 - 2 * u * profile.drho / rho ** 3
    ds = 2 * B * ur / (1 + Fq)
    dz = 2 * B * u * ur1 / (1 + Fq)
    dnu = (ds - u1 / J ** 2 * dz) / np.sqrt(1 + u1 ** 2 / J ** 2)
    return (H + 0.5 * dnu) / (1 + Fq)


def jacobi_operator(profile, v):
    """``v'' + (w'/w) v' + (|A|^2 + 3) v`` with the profile's difference operators."""
    v = _check_u(profile, v)
    return (profile.deriv(v, 2) + profile.wlog * profile.deriv(v, 1)
            + (profile.A2 + 3.0) * v)


def linearization(profile, v, B):
    """Directional derivative of the conformal mean curvature at ``u = 0``."""
    return jacobi_operator(profile, v) + B * np.asarray(v) / profile.rho ** 2


def coercivity_parameters(profile, factor=2.0):
    """``(b_tilde_star, b, B)`` with ``b = factor * b_tilde_star`` and ``B = -2(1 + b^2)``."""
    bt = math.sqrt(float(np.max(profile.rho ** 2 * (profile.A2 + 3.0))))
    b = factor * bt
    return bt, b, -2.0 * (1.0 + b * b)


@dataclass
class TridiagonalOperator:
    """``L v = (S v) / mass`` with ``S`` symmetric tridiagonal (linear elements)."""

    diag: np.ndarray
    off: np.ndarray
    mass: np.ndarray

    def apply(self, v):
        Sv = self.diag * v
        Sv[:-1] += self.off * v[1:]
        Sv[1:] += self.off * v[:-1]
        return Sv / self.mass

    def solve(self, f):
        ab = np.zeros((3, len(self.diag)))
        ab[0, 1:] = self.off
        ab[1] = self.diag
        ab[2, :-1] = self.off
        return solve_banded((1, 1), ab, self.mass * np.asarray(f, dtype=float))

    def pivots(self):
        return K.ldl_pivots(self.diag, self.off)


def linearized_operator(profile, B, certify=True):
    """Tridiagonal discretization of ``J + B/rho^2`` on invariant functions.

    Neumann ends.  With ``certify`` every LDL^T pivot must be negative, the
    discrete form of coercivity; otherwise NotCoercive names the first
    offending sample.
    """
    s = profile.curve.s
    ln = np.diff(s)
    w = profile.w
    wm = 0.5 * (w[1:] + w[:-1])
    k = wm / ln
    mass = np.zeros(len(s))
    mass[:-1] += 0.5 * wm * ln
    mass[1:] += 0.5 * wm * ln
    V = profile.A2 + 3.0 + B / profile.rho ** 2
    diag = np.zeros(len(s))
    diag[:-1] -= k
    diag[1:] -= k
    diag += V * mass
    op = TridiagonalOperator(diag, k.copy(), mass)
    if certify:
        piv = op.pivots()
        bad = np.flatnonzero(piv >= 0.0)
        if len(bad):
            j = int(bad[0])
            raise NotCoercive("linearized operator has a nonnegative pivot", index=j,
                              pivot=float(piv[j]), rho=float(profile.rho[j]), B=B)
    return op


def norm1(profile, f, beta=Q_BETA, q=Q_REG):
    """Weighted norm of order ``q - 2`` and weight ``beta - 2``."""
    return weighted_sup_norm(f, profile.rho, profile.h, beta - 2.0, q - 2,
                             ghost=profile.ghost_fn() if profile.edges else None,
                             spacing=profile.stride)


def norm2(profile, u, beta=Q_BETA, q=Q_REG):
    """Weighted norm of order ``q`` and weight ``beta``."""
    return weighted_sup_norm(u, profile.rho, profile.h, beta, q,
                             ghost=profile.ghost_fn() if profile.edges else None,
                             spacing=profile.stride)


# ---------------------------------------------------------------------------
# Picard iteration

@dataclass
class PicardState:
    iter: int
    u: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    norm1: float
    norm2: float
    residual: float
    contraction: float = float("nan")

    def row(self):
        return [self.iter, self.norm1, self.norm2, self.residual, self.contraction]


def picard_solve(profile, B, tol=1e-6, max_iter=10, r0=None, op=None):
    """Iterate ``u_{k+1} = L^{-1} f_k`` with ``f_k = -M(0) - Z(u_k)``.

    ``Z(u) = M(u) - M(0) - L u`` is the superlinear remainder, so the fixed
    point solves ``M(u) = 0``.  The observed ratio
    ``||f_{k+1} - f_k||_1 / ||f_k - f_{k-1}||_1`` is recorded; two ratios
    above 0.9 raise ContractionFailure.  ``r0`` optionally bounds the initial
    ``||M(0)||_1`` (the smallness hypothesis of the scheme).
    """
    L = linearized_operator(profile, B) if op is None else op
    M0 = conformal_mean_curvature(profile, np.zeros(len(profile)), B)
    f = -M0
    n1 = norm1(profile, f)
    if r0 is not None and n1 >= r0:
        raise ContractionFailure("initial defect above the perturbative radius",
                                 norm1=n1, r0=r0)
    u = np.zeros(len(profile))
    states = [PicardState(0, u, f, n1, 0.0, float(np.max(np.abs(M0))))]
    prev_df = None
    strikes = 0
    for it in range(1, max_iter + 1):
        if states[-1].residual < tol:
            break
        u = L.solve(f)
        Mu = conformal_mean_curvature(profile, u, B)
        f_new = -Mu + L.apply(u)
        df = norm1(profile, f_new - f)
        ratio = df / prev_df if prev_df else float("nan")
        if prev_df and ratio > 0.9:
            strikes += 1
            if strikes >= 2:
                raise ContractionFailure("Picard iteration is not contracting",
                                         iteration=it, ratio=ratio)
        prev_df = df
        f = f_new
        states.append(PicardState(it, u, f, norm1(profile, f), norm2(profile, u),
                                  float(np.max(np.abs(Mu))), ratio))
    return states


def quadratic_remainder_bound(profile, u1, u2, B):
    """``||Z(u1) - Z(u2)||_1 / ||u1 - u2||_2`` with ``Z`` built on the exact linearization."""
    u1, u2 = _check_u(profile, u1), _check_u(profile, u2)
    du = u1 - u2
    if not np.any(du):
        return 0.0
    Z1 = conformal_mean_curvature(profile, u1, B) - linearization(profile, u1, B)
    Z2 = conformal_mean_curvature(profile, u2, B) - linearization(profile, u2, B)
    return norm1(profile, Z1 - Z2) / norm2(profile, du)


# ---------------------------------------------------------------------------
# independent check from the final positions

def _fermi(profile, Y, j0):
    """Fermi coordinates ``(z, s)`` of points ``Y`` near samples ``j0``."""
    s_grid = profile.curve.s
    herm = QuinticHermite(s_grid, profile.X, profile.T, profile.kappa[:, None] * profile.n
                          - profile.X)
    z = s_grid[j0].copy()
    for _ in range(8):
        x, t, c = herm(z)
        g = np.einsum("ij,ij->i", Y, t)
        dg = np.einsum("ij,ij->i", Y, c)
        z = z - g / dg
    x, t, _ = herm(z)
    nn = np.cross(x, t)
    s = np.arctan2(np.einsum("ij,ij->i", Y, nn), np.einsum("ij,ij->i", Y, x))
    return z, s, np.hypot(x[:, 0], x[:, 1])


def recompute_conformal_mean_curvature(profile, P, B, rel_step=0.02):
    """Conformal mean curvature of the curve through the points ``P``.

    Uses only ``P`` and the base profile: curvatures come from strided finite
    differences of the positions, the graph function is read off by projecting
    ``P`` onto the normal geodesics, and the normal derivative of ``log Q`` is a
    central difference along the geodesic normal of the new curve.
    """
    P = np.asarray(P, dtype=float)
    h = profile.h
    stride = np.maximum(1, np.round(rel_step * profile.rho / h)).astype(int)
    R = np.array([1.0, -1.0, 1.0]), np.array([-1.0, 1.0, 1.0])
    n = len(P)
    j = np.arange(HALF_WIDTH)
    if profile.edges:
        left = (-h * (j + 1)[::-1], (P[j] * R[0])[::-1])
        right = (h * (n + j), P[n - 1 - j] * R[1])
    else:
        left = right = None
    D1 = derivative(P, h, 1, left=left, right=right, spacing=stride)
    D2 = derivative(P, h, 2, left=left, right=right, spacing=stride)
    sp = np.linalg.norm(D1, axis=1)
    cr = np.cross(P, D1)
    kP = np.einsum("ij,ij->i", D2, cr) / sp ** 3
    nu = cr / sp[:, None]
    H = kP - nu[:, 0] / P[:, 0] - nu[:, 1] / P[:, 1]
    # graph function, read back from the positions
    u = np.arctan2(np.einsum("ij,ij->i", P, profile.n), np.einsum("ij,ij->i", P, profile.X))
    uspl = CubicSpline(profile.curve.s, u)
    idx = np.arange(n)

    def logQ(Y):
        z, s, rho = _fermi(profile, Y, idx)
        return 2.0 * np.log(1.0 + B * s * uspl(z) / rho ** 2)

    d = 1e-3 * profile.rho
    Yp = np.cos(d)[:, None] * P + np.sin(d)[:, None] * nu
    Ym = np.cos(d)[:, None] * P - np.sin(d)[:, None] * nu
    dnu = (logQ(Yp) - logQ(Ym)) / (2 * d)
    Q = (1.0 + B * u * u / profile.rho ** 2) ** 2
    return (H + 0.5 * dnu) / np.sqrt(Q)
