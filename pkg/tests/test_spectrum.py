import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morseforge import acceptance as A
from morseforge import spectrum as S
from morseforge.shooting import equator_curve, football_meridian


@pytest.fixture(scope="module")
def equator():
    return equator_curve(h=1e-4)


def test_football_potentials():
    fb = football_meridian(h=1e-3)
    sn2 = np.sin(fb.c[:, 0]) ** 2
    # the pole end node is prepended
    np.testing.assert_allclose(S.mode_potential(fb, 0, 0).potential[1:-1], 3 + 2 / sn2, rtol=1e-9)
    np.testing.assert_allclose(S.mode_potential(fb, 1, 0).potential[1:-1], 3.0, atol=1e-6)
    j = int(np.argmin(np.abs(fb.c[:, 0] - math.pi / 2)))
    assert abs(3 + 2 / sn2[j] - 5) < 1e-6


def test_equator_potential_at_bisector(equator):
    prob = S.mode_potential(equator, 1, 1)
    j = int(np.argmin(np.abs(equator.c[:, 1] - math.pi / 4))) + 1  # end node prepended
    assert abs(prob.potential[j] - (3 - 4)) < 1e-3


def test_end_conditions(equator):
    assert S.mode_potential(equator, 0, 0).bc_left == S.NEUMANN
    # the curve leaves the a2 = 0 edge and ends on a1 = 0
    prob = S.mode_potential(equator, 0, 1)
    assert (prob.bc_left, prob.bc_right) == (S.DIRICHLET, S.NEUMANN)


def test_equator_index(equator):
    rep = S.morse_index(equator)
    assert rep.pmax == 2
    assert rep.total_index == 1 and rep.nullity_estimate >= 4
    m22 = next(m for m in rep.modes if (m.p, m.q) == (2, 2))
    assert m22.neg == 0


def test_football_cutoff():
    assert S.mode_cutoff(football_meridian(h=1e-3)) == 2


def test_cutoffs_bounded_along_branches(hsiang):
    assert max(A._index(i).pmax for i in range(4)) <= 4


def test_index_grows(hsiang):
    idx = [A._index(i).total_index for i in range(4)]
    assert idx[1] > 1
    assert all(b > a for a, b in zip(idx, idx[1:]))


def test_nonpositive_potential_has_no_negatives():
    x = np.linspace(0, 1, 80)
    prob = S.ModeProblem(0, 0, x, np.ones(80), -np.abs(np.sin(9 * x)), S.NEUMANN, S.DIRICHLET)
    assert S.mode_negative_count(prob, 0.0) == (0, 0)


def test_constant_potential_counts_cosines():
    # -f'' - V f on [0, pi] with Neumann ends: eigenvalues k^2 - V
    n = 4000
    x = np.linspace(0, math.pi, n)
    prob = S.ModeProblem(0, 0, x, np.ones(n), np.full(n, 10.0))
    assert S.mode_negative_count(prob, 1e-6)[0] == 4  # k = 0, 1, 2, 3


def test_small_problems_rejected():
    x = np.linspace(0, 1, 20)
    with pytest.raises(ValueError):
        S.mode_negative_count(S.ModeProblem(0, 0, x, np.ones(20), np.zeros(20)))
    with pytest.raises(ValueError):
        S.ModeProblem(0, 0, x[::-1], np.ones(20), np.zeros(20))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_ldl_inertia_matches_dense(seed):
    prob = A.random_mode_problem(np.random.default_rng(seed))
    diag, off, mass = S.mode_pencil(prob)
    assert S._count_below(diag, off, mass, 0.0)[0] == S.dense_negative_count(prob)


def test_regularizing_modes():
    counts = [S.football_truncated_count(e, 0, 0, 2.0) for e in (1e-2, 1e-3, 1e-4)]
    assert counts[0] < counts[1] < counts[2]
    assert S.football_truncated_count(1e-4, 1, 1, 2.0) == 0
    assert S.football_truncated_count(1e-4, 0, 0, -3.0) == 0


def test_report_serialization(equator):
    d = S.morse_index(equator).to_dict()
    assert set(d) == {"pmax", "modes", "totalIndex", "nullity"}
    assert set(d["modes"][0]) == {"p", "q", "mult", "neg", "nearNull"}
