import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from morseforge import conifold as C
from morseforge.errors import NonFredholmWeight


@given(st.integers(0, 6), st.integers(0, 6), st.floats(-20, 20))
def test_roots_solve_the_polynomial_and_pair_up(p, q, c):
    r1, r2 = C.indicial_roots(p, q, c)
    for t in (r1, r2):
        assert abs(C.indicial_polynomial(t, p, q, c)) < 1e-8 * (1 + abs(c) + p * p + q * q)
    assert abs(r1 + r2 + 1) < 1e-12
    assert r1.real >= r2.real


def test_root_examples():
    assert C.indicial_roots(1, 0, 2.0) == (0.0, -1.0)
    r = C.indicial_roots(0, 0, -8.0)
    assert abs(r[0].real - (-0.5 + math.sqrt(33) / 2)) < 1e-12
    z = C.indicial_roots(0, 0, 2.0)[0]
    assert z.real == -0.5 and abs(z.imag - math.sqrt(7) / 2) < 1e-12


def test_fredholm_anchor():
    assert C.weight_crossing_sum(1.5, 2.0) == 36
    assert C.fredholm_index(1.5, 2.0) == -18


def test_fredholm_at_beta_two_and_a_half():
    # lattice enumeration gives 84 crossings here
    assert C.weight_crossing_sum(2.5, 2.0) == 84
    assert C.fredholm_index(2.5, 2.0) == -42


def test_shift_makes_an_isomorphism():
    b = 2 * C.b_star(2.1)
    rep = C.indicial_report(2.1, -2 * b * b)
    assert rep.isomorphism and rep.fredholm_index == 0


def test_nonfredholm_weight():
    with pytest.raises(NonFredholmWeight):
        C.fredholm_index(1.0, 2.0)


def test_b_star():
    assert abs(C.b_star(1.5) - math.sqrt(15 / 8)) < 1e-14
    assert C.b_star(1.1) == math.sqrt(1.5)
    with pytest.raises(ValueError):
        C.b_star(1.0)


@pytest.mark.parametrize("beta", [1.5, 2.5, 3.7])
def test_strip_entry_above_the_floor(beta):
    assert abs(C.locate_strip_entry(beta) - C.b_star(beta)) < 1e-9


@pytest.mark.xfail(strict=True, reason="below beta ~ 1.22 the strip empties at the (0,0) exit, "
                   "not at the sqrt(3/2) floor of b*")
def test_strip_entry_at_beta_1_1():
    assert abs(C.locate_strip_entry(1.1) - C.b_star(1.1)) < 1e-9


def test_strip_entry_is_the_exit_of_the_zero_mode():
    assert abs(C.locate_strip_entry(1.1) - C.strip_exit_b(1.1)) < 1e-9


def test_report_json_keys():
    d = C.indicial_report(1.5, 2.0).to_dict()
    assert set(d) == {"c", "beta", "strip", "entries", "crossingSum", "fredholmIndex",
                      "isomorphism"}
    assert d["strip"] == [-2.5, 1.5]


def test_weighted_norm_of_power():
    h = 1e-4
    rho = np.arange(0.01, 1.0, h)
    u = rho ** 2.1
    assert abs(C.weighted_sup_norm(u, rho, h, 2.1, 0) - 1.0) < 1e-12
    assert abs(C.weighted_sup_norm(u, rho, h, 2.1, 1) - 3.1) < 1e-8
    with pytest.raises(ValueError):
        C.weighted_sup_norm(u, rho, h, 2.1, 5)
