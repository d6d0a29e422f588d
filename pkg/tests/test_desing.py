import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morseforge import acceptance as A
from morseforge import desing as D
from morseforge.errors import ConformalBlowup, ContractionFailure, GraphFailure, NotCoercive


@pytest.fixture(scope="module")
def long_cap():
    return D.alencar_cap(reach=2200.0)


@pytest.fixture(scope="module")
def football():
    return D.football_body(h=1e-4, r_start=0.01)


@pytest.fixture(scope="module")
def picard_run(desing_profile):
    B = D.coercivity_parameters(desing_profile)[2]
    return B, D.picard_solve(desing_profile, B, tol=1e-6, max_iter=10)


# --- building blocks ---------------------------------------------------------

def test_smooth_step_values():
    S, S1, S2 = D.smooth_step(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    np.testing.assert_array_equal(S[[0, 1, 3, 4]], [1, 1, 0, 0])
    assert S[2] == 0.5
    assert np.all(S1 <= 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.02, 0.98))
def test_smooth_step_derivatives(y):
    d = 1e-5
    S = lambda x: D.smooth_step(np.array([x]))
    s0, s1, s2 = (v[0] for v in S(y))
    assert abs((S(y + d)[0][0] - S(y - d)[0][0]) / (2 * d) - s1) < 1e-6 * (1 + abs(s1))
    assert abs((S(y + d)[1][0] - S(y - d)[1][0]) / (2 * d) - s2) < 1e-5 * (1 + abs(s2))


def test_quintic_hermite_is_exact_on_quintics():
    p = np.polynomial.Polynomial([0.3, -1, 2, 0.5, -0.7, 0.2])
    x = np.array([0.0, 0.4, 1.1, 2.0])
    h = D.QuinticHermite(x, p(x)[:, None], p.deriv()(x)[:, None], p.deriv(2)(x)[:, None])
    t = np.linspace(0, 2, 37)
    v, d, dd = h(t)
    np.testing.assert_allclose(v[:, 0], p(t), atol=1e-12)
    np.testing.assert_allclose(d[:, 0], p.deriv()(t), atol=1e-11)
    np.testing.assert_allclose(dd[:, 0], p.deriv(2)(t), atol=1e-10)


def test_sinc_branches_agree():
    m = np.array([1e-2 * (1 - 1e-12), 1e-2 * (1 + 1e-12)])
    for a, b in zip(*(D._sinc_terms(m[[0]]), D._sinc_terms(m[[1]]))):
        assert abs(a[0] - b[0]) < 1e-12


def test_exponential_map_derivatives():
    t = np.linspace(0.2, 1.0, 9)
    F = np.stack([t, 0.3 * t ** 2], axis=1)
    F1 = np.stack([np.ones_like(t), 0.6 * t], axis=1)
    F2 = np.stack([np.zeros_like(t), np.full_like(t, 0.6)], axis=1)
    X, X1, X2 = D._to_sphere(F, F1, F2)
    np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-15)
    np.testing.assert_allclose(np.arccos(X[:, 2]), np.linalg.norm(F, axis=1), atol=1e-14)
    d = 1e-6
    Xp = D._to_sphere(F + d * F1 + 0.5 * d * d * F2, F1 + d * F2, F2)[0]
    Xm = D._to_sphere(F - d * F1 + 0.5 * d * d * F2, F1 - d * F2, F2)[0]
    np.testing.assert_allclose((Xp - Xm) / (2 * d), X1, atol=1e-8)
    np.testing.assert_allclose((Xp - 2 * X + Xm) / d ** 2, X2, atol=1e-3)


# --- the interpolated profile --------------------------------------------------

def test_profile_invariants(desing_profile):
    pr = desing_profile
    assert np.all((pr.blend >= 0) & (pr.blend <= 1))
    assert np.all(pr.blend[pr.rho <= 0.099] == 1.0)
    assert np.all(pr.blend[pr.rho >= 0.2] == 0.0)
    body = pr.rho >= pr.eta2
    np.testing.assert_allclose(pr.X[body, 0], pr.X[body, 1], rtol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(pr.T, axis=1), 1.0, atol=1e-14)
    # central symmetry of the two halves
    np.testing.assert_allclose(D.central_mirror(pr.X[::-1]), pr.X, atol=1e-12)
    assert pr.curve.meta["start"]["type"] == "edge" and pr.curve.meta["end"]["type"] == "edge"


def test_samples_are_unit_speed(desing_profile):
    pr = desing_profile
    chord = np.linalg.norm(np.diff(pr.X, axis=0), axis=1)
    # chord of a unit-speed arc of length h on the sphere: about h - (1 + kappa^2) h^3 / 24
    k2 = np.maximum(pr.kappa[:-1] ** 2, pr.kappa[1:] ** 2)
    defect = 1 - chord / pr.h
    assert np.all(np.abs(defect) <= 1.1 * (1 + k2) * pr.h ** 2 / 24 + 1e-10)


def test_residual_localization(desing_profile):
    pr = desing_profile
    assert np.max(np.abs(pr.H0[pr.rho >= pr.eta2])) < 1e-8


def test_residual_decays_with_cap_scale(long_cap):
    caps, anns = [], []
    for e1 in (1e-2, 1e-3, 1e-4):
        pr = D.interpolate_profile(long_cap, e1, 0.2)
        M0 = np.abs(D.conformal_mean_curvature(pr, np.zeros(len(pr)), -10.0))
        caps.append(M0[pr.region == 0].max())
        anns.append(M0[pr.region == 1].max())
    assert caps[0] >= caps[1] >= caps[2]
    assert anns[1] < anns[0]


def test_coercivity_inherited_across_cap_scales(long_cap):
    b = None
    for e1 in (1e-2, 1e-3, 1e-4):
        pr = D.interpolate_profile(long_cap, e1, 0.2)
        if b is None:
            b = D.coercivity_parameters(pr)[1]
        assert np.all(D.linearized_operator(pr, -2 * (1 + b * b)).pivots() < 0)


def test_caps_too_large():
    with pytest.raises(GraphFailure):
        D.interpolate_profile(D.alencar_cap(reach=5.0), 0.1, 0.12)


# --- the conformal map --------------------------------------------------------

def test_football_is_a_zero(football):
    M = D.conformal_mean_curvature(football, np.zeros(len(football)), -10.0)
    assert np.max(np.abs(M)) < 1e-9


def test_zero_graph_gives_profile_mean_curvature(desing_profile):
    pr = desing_profile
    M = D.conformal_mean_curvature(pr, np.zeros(len(pr)), -42.0)
    np.testing.assert_allclose(M, pr.H0, atol=1e-10)


def test_conformal_factor_properties(desing_profile):
    pr = desing_profile
    u = 0.1 * pr.rho ** 2.2
    B = -42.0
    assert np.all(D.conformal_factor(pr, u, 0.0, B) == 1.0)
    d = 1e-6
    dlog = (np.log(D.conformal_factor(pr, u, d, B)) - np.log(D.conformal_factor(pr, u, -d, B))) / (2 * d)
    assert np.max(np.abs(dlog - 2 * B * u / pr.rho ** 2)) < 1e-10 * (1 + np.max(np.abs(dlog)))


def test_blowup_detected(desing_profile):
    pr = desing_profile
    with pytest.raises(ConformalBlowup):
        D.conformal_mean_curvature(pr, 0.5 * pr.rho, -42.0)


def test_linearization_defect_is_first_order(desing_profile):
    B = D.coercivity_parameters(desing_profile)[2]
    tab = A.linearization_defects(desing_profile, B, eps=(1e-3, 1e-4), n=2, seed=3)
    assert np.all(tab <= 5 * np.array([1e-3, 1e-4]))


def test_linearization_on_football(football):
    # the quadratic term vanishes on the football, so the defect is O(eps^2)
    v = football.rho ** 2.2 * (1 + 0.5 * np.cos(football.curve.s))
    Lv = D.linearization(football, v, -42.0)
    d = [np.max(np.abs((D.conformal_mean_curvature(football, e * v, -42.0) -
                        D.conformal_mean_curvature(football, 0 * v, -42.0)) / e - Lv))
         for e in (1e-3, 1e-4)]
    assert d[1] < d[0] / 50


# --- the linear operator and the iteration -------------------------------------

def test_football_coercivity(football):
    bt, b, B = D.coercivity_parameters(football)
    assert abs(bt - math.sqrt(5)) < 1e-6
    assert np.all(D.linearized_operator(football, B).pivots() < 0)
    with pytest.raises(NotCoercive) as info:
        D.linearized_operator(football, -2.0)
    assert "index" in info.value.details
    piv = D.linearized_operator(football, -2.0, certify=False).pivots()
    assert np.any(piv > 0) and np.any(piv < 0)


def test_solve_then_apply(desing_profile):
    L = D.linearized_operator(desing_profile, D.coercivity_parameters(desing_profile)[2])
    f = np.random.default_rng(1).normal(size=len(desing_profile))
    u = L.solve(f)
    scale = (np.max(np.abs(L.diag)) + 2 * np.max(np.abs(L.off))) * np.max(np.abs(u)) + np.max(np.abs(f))
    assert np.max(np.abs(L.apply(u) - f)) / scale < 1e-12


def test_picard_on_the_football(football):
    states = D.picard_solve(football, D.coercivity_parameters(football)[2])
    assert len(states) == 1 and np.all(states[-1].u == 0)


def test_picard_converges(picard_run, desing_profile):
    B, states = picard_run
    assert states[-1].residual < 1e-6 and len(states) <= 11
    assert all(s.contraction <= 0.5 for s in states[2:])
    assert all(np.isfinite([s.norm1, s.norm2]).all() for s in states)
    res = [s.residual for s in states]
    assert all(b < a for a, b in zip(res, res[1:]))
    P = D.graph_positions(desing_profile, states[-1].u)
    assert np.max(np.abs(D.recompute_conformal_mean_curvature(desing_profile, P, B))) < 2e-6


def test_initial_defect_above_radius(desing_profile):
    B = D.coercivity_parameters(desing_profile)[2]
    with pytest.raises(ContractionFailure):
        D.picard_solve(desing_profile, B, r0=0.1)


def test_remainder_bound(picard_run, desing_profile):
    B, states = picard_run
    u = states[-1].u
    assert D.quadratic_remainder_bound(desing_profile, u, u, B) == 0.0
    zero = np.zeros_like(u)
    r1 = D.quadratic_remainder_bound(desing_profile, u, zero, B)
    r2 = D.quadratic_remainder_bound(desing_profile, 0.5 * u, zero, B)
    assert abs(r2 / r1 - 0.5) < 0.125
