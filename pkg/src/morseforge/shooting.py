"""Integration of the reduced ODE and shooting for Alencar and Hsiang curves."""

from dataclasses import dataclass, field
from functools import cached_property
import csv
import math

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K
from .errors import BranchNotFound, InvalidStart, StepTooLarge
from .orbit import (FLAT, SPHERICAL, CurveState, OrbitKind, OrbitPoint, normal_ambient,
                    state_from_ambient, state_to_ambient)

__all__ = [
    "ProfileCurve", "HsiangProfile", "DELTA_EDGE", "edge_start_expansion",
    "integrate_profile", "shoot_alencar", "bisector_crossings", "bisector_crossing_points",
    "shoot_hsiang", "symmetry_defect", "football_meridian", "equator_curve",
    "cone_distance", "central_mirror", "scan_defects", "profile_from_edge",
]

DELTA_EDGE = 1e-4
C_SUB = 0.02
DRIFT_TOL = 1e-6
CROSS_TOL = 1e-12


# ---------------------------------------------------------------------------
# curves

@dataclass
class ProfileCurve:
    """Unit-speed sampled generating curve at uniform arclength spacing ``h``.

    Chart coordinates and chart tangents are the canonical storage (they are
    what gets exported); the ambient picture is derived from them on demand,
    so a curve read back from CSV behaves exactly like the original.
    """

    kind: OrbitKind
    s: np.ndarray
    c: np.ndarray
    t: np.ndarray
    h: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.s)

    @classmethod
    def from_ambient(cls, kind, X, T, s0, h, meta=None):
        X = np.asarray(X, dtype=float)[:, : kind.dim]
        T = np.asarray(T, dtype=float)[:, : kind.dim]
        s = s0 + h * np.arange(len(X))
        if kind.is_spherical:
            rho = np.hypot(X[:, 0], X[:, 1])
            r = np.arctan2(rho, X[:, 2])
            om = np.arctan2(X[:, 1], X[:, 0])
            e_r = np.stack([np.cos(r) * np.cos(om), np.cos(r) * np.sin(om), -np.sin(r)], axis=1)
            e_w = np.stack([-np.sin(om), np.cos(om), np.zeros_like(om)], axis=1)
            t1 = np.einsum("ij,ij->i", T, e_r)
            with np.errstate(divide="ignore", invalid="ignore"):
                t2 = np.where(rho > 0, np.einsum("ij,ij->i", T, e_w) / np.sin(r), 0.0)
            c = np.stack([r, om], axis=1)
            t = np.stack([t1, t2], axis=1)
        else:
            c = X.copy()
            t = T.copy()
        curve = cls(kind, s, c, t, float(h), dict(meta or {}))
        curve.meta.setdefault("start", _endpoint_info(curve, 0))
        curve.meta.setdefault("end", _endpoint_info(curve, -1))
        return curve

    @cached_property
    def X(self):
        if self.kind.is_spherical:
            r, om = self.c[:, 0], self.c[:, 1]
            sr = np.sin(r)
            return np.stack([sr * np.cos(om), sr * np.sin(om), np.cos(r)], axis=1)
        return self.c.copy()

    @cached_property
    def T(self):
        if self.kind.is_spherical:
            r, om = self.c[:, 0], self.c[:, 1]
            e_r = np.stack([np.cos(r) * np.cos(om), np.cos(r) * np.sin(om), -np.sin(r)], axis=1)
            e_w = np.stack([-np.sin(om), np.cos(om), np.zeros_like(om)], axis=1)
            return self.t[:, :1] * e_r + (self.t[:, 1] * np.sin(r))[:, None] * e_w
        return self.t.copy()

    @cached_property
    def N(self):
        """Unit normals (tangent rotated by +90 degrees)."""
        if self.kind.is_spherical:
            return np.cross(self.X, self.T)
        return np.stack([-self.T[:, 1], self.T[:, 0]], axis=1)

    @property
    def a1(self):
        return np.abs(self.X[:, 0])

    @property
    def a2(self):
        return np.abs(self.X[:, 1])

    @property
    def rho(self):
        """Distance-to-pole surrogate: ``sin r`` on the lune, ``|X|`` in the plane."""
        return np.hypot(self.X[:, 0], self.X[:, 1])

    @property
    def samples(self):
        return [CurveState(OrbitPoint(float(a), float(b)), (float(u), float(v)), float(s))
                for (a, b), (u, v), s in zip(self.c, self.t, self.s)]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["s", "c1", "c2", "t1", "t2"])
            for s, (c1, c2), (t1, t2) in zip(self.s, self.c, self.t):
                wr.writerow([repr(float(v)) for v in (s, c1, c2, t1, t2)])

    @classmethod
    def from_csv(cls, path, kind=SPHERICAL, meta=None):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        s = data[:, 0]
        h = (s[-1] - s[0]) / (len(s) - 1) if len(s) > 1 else 0.0
        curve = cls(kind, s.copy(), data[:, 1:3].copy(), data[:, 3:5].copy(), float(h),
                    dict(meta or {}))
        curve.meta.setdefault("start", _endpoint_info(curve, 0))
        curve.meta.setdefault("end", _endpoint_info(curve, -1))
        return curve


@dataclass
class HsiangProfile:
    """A shot Hsiang solution E_i."""

    i: int
    crossings: int
    r0: float
    curve: ProfileCurve
    symmetry_defect: float
    scan: list = field(default_factory=list)


def _edge_distance(X, j, kind):
    a = abs(X[j])
    return math.asin(min(a, 1.0)) if kind.is_spherical else a


def _pole_distance(X, kind):
    rho = math.hypot(X[0], X[1])
    if kind.is_spherical:
        return math.atan2(rho, abs(X[2]))
    return rho


def _endpoint_info(curve, idx):
    """Classify a curve end as a perpendicular edge hit, a pole approach or open.

    The classification only uses the sampled geometry so that it is the same
    for freshly integrated and re-imported curves.
    """
    kind = curve.kind
    X = curve.X[idx]
    out = curve.T[idx] * (1.0 if idx == -1 else -1.0)
    h = max(curve.h, 1e-12)
    # the last sample can sit one step plus the stopping offset from the edge
    reach = 2.0 * h + 2.0 * DELTA_EDGE
    dp = _pole_distance(X, kind)
    rho = math.hypot(X[0], X[1])
    if dp <= reach and rho > 0 and (X[0] * out[0] + X[1] * out[1]) / rho < -0.99:
        return {"type": "pole", "distance": dp}
    for j in (0, 1):
        d = _edge_distance(X, j, kind)
        if d <= reach:
            grad = np.zeros(kind.dim)
            grad[j] = 1.0
            if kind.is_spherical:
                grad = grad - X[j] * X
            ng = np.linalg.norm(grad)
            if ng > 0 and float(out @ grad) / ng < -0.99:
                return {"type": "edge", "axis": j + 1, "distance": d}
    return {"type": "open", "distance": 0.0}


# ---------------------------------------------------------------------------
# starts and integration

def _edge_start_ambient(r0, kind, delta):
    kk = kind.k
    if kind.is_spherical:
        X0 = np.array([math.sin(r0), 0.0, math.cos(r0)])
        T0 = np.array([0.0, 1.0, 0.0])
        n0 = np.array([-math.cos(r0), 0.0, math.sin(r0)])
        kap = kk / (kk + 1.0) * n0[0] / X0[0]
        acc = kap * n0 - X0
        jerk = -(1.0 + kap * kap)
    else:
        X0 = np.array([float(r0), 0.0, 0.0])
        T0 = np.array([0.0, 1.0, 0.0])
        n0 = np.array([-1.0, 0.0, 0.0])
        kap = kk / (kk + 1.0) * (-1.0 / r0)
        acc = kap * n0
        jerk = -kap * kap
    # the reflection symmetry across the edge kills the odd terms of the
    # curvature, so this truncation is accurate to third order in delta
    X = X0 + delta * T0 + 0.5 * delta ** 2 * acc + delta ** 3 / 6.0 * jerk * T0
    T = T0 + delta * acc + 0.5 * delta ** 2 * jerk * T0
    if kind.is_spherical:
        X /= np.linalg.norm(X)
        T -= (T @ X) * X
    T /= np.linalg.norm(T)
    return X, T


def edge_start_expansion(r0, kind, delta):
    """State at arclength ``delta`` from a perpendicular hit of the ``a2 = 0`` edge.

    The curve leaves the edge point of chart coordinate ``r0`` (``x`` in the
    plane, ``r`` on the lune) at a right angle.  Its curvature there is the
    continuous extension ``kappa0 = k/(k+1) d_n log a1`` of the target.
    """
    if kind.is_spherical:
        if not 0.0 < r0 < math.pi:
            raise InvalidStart("edge start radius must avoid the poles", r0=r0)
    elif not r0 > 0.0:
        raise InvalidStart("edge start must avoid the origin", r0=r0)
    if not 0.0 < delta <= 1e-3:
        raise InvalidStart("offset must lie in (0, 1e-3]", delta=delta)
    X, T = _edge_start_ambient(r0, kind, delta)
    return state_from_ambient(X[: kind.dim], T[: kind.dim], delta, kind)


def _as3(v):
    out = np.zeros(3)
    out[: len(v)] = v
    return out


def _run(kind, X0, T0, s0, h, s_max, delta_edge=DELTA_EDGE, max_cross=0, meta=None):
    if not 1e-6 < h <= 1e-2:
        raise ValueError(f"step h={h} outside (1e-6, 1e-2]")
    n_max = max(1, int(math.ceil((s_max - s0) / h - 1e-9)))
    Xs, Ts, n, stop, ncross = K.integrate_kernel(
        _as3(X0), _as3(T0), kind.is_spherical, float(kind.k), float(h), n_max,
        float(delta_edge), C_SUB, int(max_cross), DRIFT_TOL)
    if stop == K.STOP_DRIFT:
        raise StepTooLarge("unit-speed drift exceeded 1e-6 within one step", h=h)
    info = {"stop": K.STOP_NAMES[stop], "delta_edge": delta_edge}
    info.update(meta or {})
    return Xs, Ts, info


def integrate_profile(start, kind, h, s_max, delta_edge=DELTA_EDGE):
    """RK4 at output step ``h`` from ``start`` until ``s_max``, an edge or a pole."""
    X0, T0 = state_to_ambient(start, kind)
    Xs, Ts, info = _run(kind, X0, T0, start.s, h, s_max, delta_edge)
    return ProfileCurve.from_ambient(kind, Xs, Ts, start.s, h, info)


def profile_from_edge(r0, kind, h, s_max=2 * math.pi, delta_edge=DELTA_EDGE, max_cross=0):
    """Curve leaving the ``a2 = 0`` edge perpendicularly at ``r0``.

    The series offset is ``delta_edge`` times the local scale ``min(1, a1)``.
    """
    scale = min(1.0, math.sin(r0)) if kind.is_spherical else min(1.0, r0)
    delta = delta_edge * scale
    X0, T0 = _edge_start_ambient(r0, kind, delta)
    Xs, Ts, info = _run(kind, X0, T0, delta, h, s_max, delta_edge, max_cross,
                        {"r0": r0, "offset": delta})
    return ProfileCurve.from_ambient(kind, Xs, Ts, delta, h, info)


def shoot_alencar(h=1e-3, s_max=40.0, m=2):
    """Embedded Alencar curve from the perpendicular start at ``(1, 0)``."""
    kind = OrbitKind.flat(m)
    curve = profile_from_edge(1.0, kind, h, s_max)
    curve.meta["cone_crossings"] = bisector_crossings(curve)
    return curve


def football_meridian(h=1e-4, r_start=None, delta_edge=DELTA_EDGE):
    """Exact samples of the bisector ``omega = pi/4`` from near one pole to the other."""
    if r_start is None:
        r_start = delta_edge
    n = int(math.floor((math.pi - delta_edge - r_start) / h + 1e-9)) + 1
    r = r_start + h * np.arange(n)
    c = np.stack([r, np.full(n, math.pi / 4)], axis=1)
    t = np.stack([np.ones(n), np.zeros(n)], axis=1)
    curve = ProfileCurve(SPHERICAL, r.copy(), c, t, float(h), {"stop": "pole", "degenerate": True})
    curve.meta["start"] = {"type": "pole", "distance": float(r[0])}
    curve.meta["end"] = {"type": "pole", "distance": float(math.pi - r[-1])}
    return curve


def equator_curve(h=1e-4, delta_edge=DELTA_EDGE):
    """Integrated equator ``r = pi/2`` (the E_0 solution)."""
    return profile_from_edge(math.pi / 2, SPHERICAL, h, math.pi, delta_edge)


# ---------------------------------------------------------------------------
# bisector crossings

def _hermite(p0, p1, m0, m1, t):
    t = np.asarray(t)[..., None]
    t2, t3 = t * t, t * t * t
    return ((2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0
            + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1)


def _signs(curve):
    X = curve.X
    d = X[:, 1] - X[:, 0]
    rho = np.hypot(X[:, 0], X[:, 1])
    sg = np.sign(d)
    sg[np.abs(d) <= CROSS_TOL * rho] = 0
    return sg


def _crossing_intervals(curve):
    sg = _signs(curve)
    idx = np.flatnonzero(sg)
    if len(idx) < 2:
        return []
    change = np.flatnonzero(sg[idx[1:]] != sg[idx[:-1]])
    return [(int(idx[j]), int(idx[j + 1])) for j in change]


def bisector_crossings(curve):
    """Number of transversal sign changes of ``a2 - a1`` (i.e. of omega - pi/4)."""
    return len(_crossing_intervals(curve))


def bisector_crossing_points(curve):
    """Ambient positions of the bisector crossings, refined on Hermite cubics."""
    X, T, h = curve.X, curve.T, curve.h
    pts = []
    for j0, j1 in _crossing_intervals(curve):
        if j1 != j0 + 1:
            pts.append(0.5 * (X[j0] + X[j1]))
            continue
        p0, p1, m0, m1 = X[j0], X[j0 + 1], h * T[j0], h * T[j0 + 1]

        def g(t):
            q = _hermite(p0, p1, m0, m1, t)
            return q[1] - q[0]

        lo, hi = 0.0, 1.0
        glo = g(lo)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            gm = g(mid)
            if gm == 0.0:
                lo = hi = mid
                break
            if (gm > 0) == (glo > 0):
                lo, glo = mid, gm
            else:
                hi = mid
        pts.append(_hermite(p0, p1, m0, m1, 0.5 * (lo + hi)))
    return pts


def cone_distance(curve):
    """Euclidean distance of each flat sample to the cone ``y = x``."""
    X = curve.X
    return np.abs(X[:, 1] - X[:, 0]) / math.sqrt(2.0)


# ---------------------------------------------------------------------------
# central symmetry

def central_mirror(X):
    """Image under ``(r, w) -> (pi - r, pi/2 - w)``."""
    X = np.asarray(X)
    out = X.copy()
    out[..., 0], out[..., 1] = X[..., 1], X[..., 0]
    if X.shape[-1] == 3:
        out[..., 2] = -X[..., 2]
    return out


def _dist_to_curve(P, X, T, h, tree):
    """Distance from points to the Hermite-interpolated curve.

    Points whose nearest sample is an end sample and which lie beyond that end
    along the tangent are reported as NaN (outside the sampled range).
    """
    n = len(X)
    _, j = tree.query(P)
    best = np.full(len(P), np.inf)
    for shift in (-1, 0):
        a = np.clip(j + shift, 0, n - 2)
        p0, p1 = X[a], X[a + 1]
        m0, m1 = h * T[a], h * T[a + 1]
        t = np.clip(np.einsum("ij,ij->i", P - p0, p1 - p0)
                    / np.einsum("ij,ij->i", p1 - p0, p1 - p0), 0.0, 1.0)
        for _ in range(8):
            t2 = t[:, None]
            q = _hermite(p0, p1, m0, m1, t)
            dq = (6 * t2 ** 2 - 6 * t2) * p0 + (3 * t2 ** 2 - 4 * t2 + 1) * m0 \
                + (-6 * t2 ** 2 + 6 * t2) * p1 + (3 * t2 ** 2 - 2 * t2) * m1
            ddq = (12 * t2 - 6) * p0 + (6 * t2 - 4) * m0 + (-12 * t2 + 6) * p1 + (6 * t2 - 2) * m1
            r = q - P
            f1 = np.einsum("ij,ij->i", r, dq)
            f2 = np.einsum("ij,ij->i", dq, dq) + np.einsum("ij,ij->i", r, ddq)
            t = np.clip(t - f1 / np.where(f2 > 0, f2, 1.0), 0.0, 1.0)
        d = np.linalg.norm(_hermite(p0, p1, m0, m1, t) - P, axis=1)
        best = np.minimum(best, d)
    beyond = ((j == 0) & (np.einsum("ij,ij->i", P - X[0], T[0][None, :]) < 0)) | \
             ((j == n - 1) & (np.einsum("ij,ij->i", P - X[-1], T[-1][None, :]) > 0))
    best[beyond] = np.nan
    return best


def symmetry_defect(curve):
    """Hausdorff distance between the curve and its central mirror image.

    Mirrored samples falling beyond the sampled ends (the last partial step
    before an edge) are skipped.
    """
    X, T = curve.X, curve.T
    tree = cKDTree(X)
    d = _dist_to_curve(central_mirror(X), X, T, curve.h, tree)
    d = d[np.isfinite(d)]
    return float(d.max()) if len(d) else float("nan")


# ---------------------------------------------------------------------------
# Hsiang shooting

def _miss(r0, k, h, delta_edge):
    """Signed offset of the ``k``-th bisector crossing from the lune's center.

    Returns ``cos r`` at the crossing (zero iff the crossing is the center) or
    NaN when the curve has fewer than ``k`` crossings.
    """
    curve = profile_from_edge(r0, SPHERICAL, h, 4 * math.pi, delta_edge, max_cross=k)
    pts = bisector_crossing_points(curve)
    if len(pts) < k:
        return float("nan")
    return float(pts[k - 1][2])


def scan_defects(k, grid, h=1e-3, delta_edge=DELTA_EDGE):
    """Table of ``(r0, miss)`` for the ``k``-th crossing over a grid of starts."""
    return [(float(r0), _miss(float(r0), k, h, delta_edge)) for r0 in grid]


def default_scan_grid(n=400, lo=1e-4):
    return np.geomspace(lo, math.pi / 2, n)


def _bisect(k, a, b, fa, fb, h, delta_edge, xtol=1e-12):
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    while b - a > xtol:
        m = 0.5 * (a + b)
        fm = _miss(m, k, h, delta_edge)
        if not np.isfinite(fm):
            return None
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return a if abs(fa) <= abs(fb) else b


def _accept(curve, i):
    if curve.meta["stop"] != "edge_a1" or curve.meta["end"]["type"] != "edge":
        return False
    if bisector_crossings(curve) != 2 * i + 1:
        return False
    # embedded branch: distance from the starting pole increases monotonically
    return bool(np.all(np.diff(curve.X[:, 2]) < 1e-13))


def _center_arclength(curve, i):
    """Arclength from the first sample to the (i+1)-th bisector crossing."""
    j0, j1 = _crossing_intervals(curve)[i]
    X, T, h = curve.X, curve.T, curve.h
    if j1 != j0 + 1:
        # samples in between sit on the bisector to round-off
        return 0.5 * (j0 + j1) * h
    p0, p1, m0, m1 = X[j0], X[j1], h * T[j0], h * T[j1]
    g0 = p0[1] - p0[0]
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        q = _hermite(p0, p1, m0, m1, mid)
        if ((q[1] - q[0]) > 0) == (g0 > 0):
            lo = mid
        else:
            hi = mid
    return (j0 + 0.5 * (lo + hi)) * h


def _grid_step(curve, i):
    """Step closest to ``curve.h`` with twice the center arclength a multiple of it."""
    sc2 = 2.0 * _center_arclength(curve, i)
    return sc2 / max(1, round(sc2 / curve.h))


def _symmetric_splice(forward, i):
    """First half of ``forward`` followed by its central mirror image.

    Integrating into the far edge feeds round-off into the singular mode of
    the edge (it grows like 1/a^2 in the curvature), so the second half is
    taken from the symmetry instead; ``forward`` still certifies it.
    """
    h = forward.h
    n_tot = int(round(2.0 * _center_arclength(forward, i) / h))
    half = n_tot // 2
    X, T = forward.X[: half + 1], forward.T[: half + 1]
    jj = np.arange(n_tot - half - 1, -1, -1)
    Xm = central_mirror(forward.X[jj])
    Tm = -central_mirror(forward.T[jj])
    meta = {k: v for k, v in forward.meta.items() if k not in ("start", "end")}
    meta["construction"] = "mirrored"
    return ProfileCurve.from_ambient(SPHERICAL, np.vstack([X, Xm]), np.vstack([T, Tm]),
                                     forward.s[0], h, meta)


def shoot_hsiang(i, tol=1e-8, h=1e-4, grid=None, scan_h=1e-3, delta_edge=DELTA_EDGE):
    """Shoot the Hsiang hypersphere E_i.

    The edge-start radius ``r0`` is scanned for sign changes of the center
    offset of the ``(i+1)``-th bisector crossing, then refined by bisection.
    A curve through the center of the lune is centrally symmetric, so a zero of
    that offset is a symmetric edge-to-edge solution; among the candidates the
    smallest ``r0`` giving an embedded curve with ``2i+1`` crossings is kept.
    """
    if i < 0:
        raise ValueError("branch index must be nonnegative")
    k = i + 1
    grid = default_scan_grid() if grid is None else np.asarray(grid, dtype=float)
    table = scan_defects(k, grid, scan_h, delta_edge)
    cands = []
    for (a, fa), (b, fb) in zip(table[:-1], table[1:]):
        if np.isfinite(fa) and np.isfinite(fb) and (fa == 0.0 or fa * fb < 0):
            cands.append((a, b))
    if np.isfinite(table[-1][1]) and abs(table[-1][1]) < 1e-12:
        cands.append((table[-1][0], table[-1][0]))
    tried = []
    for a, b in cands:
        fa, fb = _miss(a, k, h, delta_edge), _miss(b, k, h, delta_edge)
        if a == b:
            r0 = a if abs(fa) < 1e-12 else None
        elif np.isfinite(fa) and np.isfinite(fb) and (fa == 0.0 or fb == 0.0 or fa * fb < 0):
            r0 = _bisect(k, a, b, fa, fb, h, delta_edge)
        else:
            r0 = None
        if r0 is None:
            tried.append({"bracket": [a, b], "reason": "no sign change at the fine step"})
            continue
        forward = profile_from_edge(r0, SPHERICAL, h, 2 * math.pi, delta_edge)
        if not _accept(forward, i):
            tried.append({"bracket": [a, b], "r0": r0, "reason": "not an embedded 2i+1 solution",
                          "crossings": bisector_crossings(forward), "stop": forward.meta["stop"]})
            continue
        # re-run on a step that puts the center on the sample grid
        h_eff = _grid_step(forward, i)
        forward = profile_from_edge(r0, SPHERICAL, h_eff, 2 * math.pi, delta_edge)
        defect = symmetry_defect(forward)
        if not (_accept(forward, i) and defect < tol):
            tried.append({"bracket": [a, b], "r0": r0, "reason": "symmetry defect above tol",
                          "defect": defect})
            continue
        curve = _symmetric_splice(forward, i)
        curve.meta.update({"branch": i, "crossings": bisector_crossings(curve),
                           "symmetry_defect": defect, "forward_end": forward.meta["end"],
                           "forward_samples": len(forward)})
        return HsiangProfile(i, 2 * i + 1, float(r0), curve, defect, table)
    raise BranchNotFound(f"no admissible sign change for branch i={i}",
                         scan=[[a, fa] for a, fa in table], candidates=tried)
