"""Compiled inner loops: RK4 for the reduced ODE and tridiagonal pivots.

Positions and tangents are 3-vectors; the flat quadrant uses the first two
components with a zero third one.
"""

import numpy as np
from numba import njit

STOP_SMAX = 0
STOP_EDGE_A1 = 1
STOP_EDGE_A2 = 2
STOP_POLE = 3
STOP_EXIT = 4
STOP_CROSSINGS = 5
STOP_DRIFT = 6
STOP_STALL = 7

STOP_NAMES = {
    STOP_SMAX: "max_length",
    STOP_EDGE_A1: "edge_a1",
    STOP_EDGE_A2: "edge_a2",
    STOP_POLE: "pole",
    STOP_EXIT: "domain_exit",
    STOP_CROSSINGS: "crossings",
    STOP_DRIFT: "drift",
    STOP_STALL: "stall",
}


@njit(cache=True)
def _rhs(X, T, sph, k, dX, dT):
    if sph:
        n0 = X[1] * T[2] - X[2] * T[1]
        n1 = X[2] * T[0] - X[0] * T[2]
        n2 = X[0] * T[1] - X[1] * T[0]
    else:
        n0 = -T[1]
        n1 = T[0]
        n2 = 0.0
    kap = k * (n0 / X[0] + n1 / X[1])
    dX[0] = T[0]
    dX[1] = T[1]
    dX[2] = T[2]
    dT[0] = kap * n0
    dT[1] = kap * n1
    dT[2] = kap * n2
    if sph:
        dT[0] -= X[0]
        dT[1] -= X[1]
        dT[2] -= X[2]


@njit(cache=True)
def _rk4(X, T, hs, sph, k, buf):
    k1x, k1t, k2x, k2t, k3x, k3t, k4x, k4t, Xt, Tt = (
        buf[0], buf[1], buf[2], buf[3], buf[4], buf[5], buf[6], buf[7], buf[8], buf[9])
    _rhs(X, T, sph, k, k1x, k1t)
    for j in range(3):
        Xt[j] = X[j] + 0.5 * hs * k1x[j]
        Tt[j] = T[j] + 0.5 * hs * k1t[j]
    _rhs(Xt, Tt, sph, k, k2x, k2t)
    for j in range(3):
        Xt[j] = X[j] + 0.5 * hs * k2x[j]
        Tt[j] = T[j] + 0.5 * hs * k2t[j]
    _rhs(Xt, Tt, sph, k, k3x, k3t)
    for j in range(3):
        Xt[j] = X[j] + hs * k3x[j]
        Tt[j] = T[j] + hs * k3t[j]
    _rhs(Xt, Tt, sph, k, k4x, k4t)
    for j in range(3):
        X[j] += hs / 6.0 * (k1x[j] + 2.0 * k2x[j] + 2.0 * k3x[j] + k4x[j])
        T[j] += hs / 6.0 * (k1t[j] + 2.0 * k2t[j] + 2.0 * k3t[j] + k4t[j])


@njit(cache=True)
def _normalize(X, T, sph):
    """Project back onto unit speed (and the unit sphere); return the drift."""
    drift = 0.0
    if sph:
        nx = np.sqrt(X[0] * X[0] + X[1] * X[1] + X[2] * X[2])
        drift = abs(nx - 1.0)
        for j in range(3):
            X[j] /= nx
        d = X[0] * T[0] + X[1] * T[1] + X[2] * T[2]
        drift = max(drift, abs(d))
        for j in range(3):
            T[j] -= d * X[j]
    nt = np.sqrt(T[0] * T[0] + T[1] * T[1] + T[2] * T[2])
    drift = max(drift, abs(nt - 1.0))
    for j in range(3):
        T[j] /= nt
    return drift


@njit(cache=True)
def _bisector_sign(X, tol):
    d = X[1] - X[0]
    rho = np.sqrt(X[0] * X[0] + X[1] * X[1])
    if abs(d) <= tol * rho:
        return 0
    return 1 if d > 0 else -1


@njit(cache=True)
def integrate_kernel(X0, T0, sph, k, h, n_max, delta_edge, c_sub, max_cross, drift_tol):
    """Fixed output step ``h`` with RK4 substeps no longer than ``c_sub*min(a1, a2)``.

    Returns ``(X, T, n_samples, stop_code, n_crossings)``.
    """
    Xs = np.empty((n_max + 1, 3))
    Ts = np.empty((n_max + 1, 3))
    buf = np.empty((10, 3))
    X = X0.copy()
    T = T0.copy()
    Xs[0] = X
    Ts[0] = T
    stop = STOP_SMAX
    ncross = 0
    last = _bisector_sign(X, 1e-12)
    i = 0
    while i < n_max:
        rem = h
        ok = True
        while rem > 0.0:
            scale = min(X[0], X[1])
            hs = min(rem, c_sub * scale)
            if hs <= 1e-13 * h:
                stop = STOP_STALL
                ok = False
                break
            _rk4(X, T, hs, sph, k, buf)
            if _normalize(X, T, sph) > drift_tol:
                stop = STOP_DRIFT
                ok = False
                break
            rem -= hs
            if rem < 1e-15 * h:
                rem = 0.0
            if X[0] <= 0.0 or X[1] <= 0.0:
                stop = STOP_EXIT
                ok = False
                break
            rho = np.sqrt(X[0] * X[0] + X[1] * X[1])
            if X[1] < delta_edge * rho and T[1] < 0.0:
                stop = STOP_EDGE_A2
                ok = False
                break
            if X[0] < delta_edge * rho and T[0] < 0.0:
                stop = STOP_EDGE_A1
                ok = False
                break
            if rho < delta_edge and X[0] * T[0] + X[1] * T[1] < 0.0:
                stop = STOP_POLE
                ok = False
                break
        if not ok:
            break
        i += 1
        Xs[i] = X
        Ts[i] = T
        sg = _bisector_sign(X, 1e-12)
        if sg != 0:
            if last != 0 and sg != last:
                ncross += 1
            last = sg
        if max_cross > 0 and ncross >= max_cross:
            stop = STOP_CROSSINGS
            break
    return Xs[: i + 1].copy(), Ts[: i + 1].copy(), i + 1, stop, ncross


@njit(cache=True)
def ldl_negative_pivots(diag, off, jitter):
    """Count negative pivots of the symmetric tridiagonal LDL^T factorization.

    A pivot that vanishes exactly is replaced by ``jitter`` times the local
    diagonal scale; the number of such replacements is returned as well.
    """
    n = diag.shape[0]
    neg = 0
    fixes = 0
    d = diag[0]
    if d == 0.0:
        d = jitter * max(abs(diag[0]), 1.0)
        fixes += 1
    if d < 0.0:
        neg += 1
    for i in range(1, n):
        d = diag[i] - off[i - 1] * off[i - 1] / d
        if d == 0.0:
            d = jitter * max(abs(diag[i]), abs(off[i - 1]), 1.0)
            fixes += 1
        if d < 0.0:
            neg += 1
    return neg, fixes


@njit(cache=True)
def ldl_pivots(diag, off):
    n = diag.shape[0]
    piv = np.empty(n)
    piv[0] = diag[0]
    for i in range(1, n):
        piv[i] = diag[i] - off[i - 1] * off[i - 1] / piv[i - 1]
    return piv
