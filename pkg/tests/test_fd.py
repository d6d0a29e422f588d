import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morseforge.fd import derivative, fornberg_weights


def test_fornberg_central_three_point():
    np.testing.assert_allclose(fornberg_weights(0.0, [-1, 0, 1], 1), [-0.5, 0, 0.5], atol=1e-15)
    np.testing.assert_allclose(fornberg_weights(0.0, [-1, 0, 1], 2), [1, -2, 1], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6),
       st.floats(-0.5, 0.5), st.integers(1, 2))
def test_fornberg_exact_on_polynomials(coef, x0, order):
    nodes = np.linspace(-1.0, 1.0, 7) + 0.01 * np.arange(7) ** 2
    p = np.polynomial.Polynomial(coef)
    w = fornberg_weights(x0, nodes, order)
    assert abs(w @ p(nodes) - p.deriv(order)(x0)) < 1e-8 * (1 + np.abs(coef).sum())


@pytest.mark.parametrize("order", [1, 2])
def test_derivative_of_sine_is_eighth_order(order):
    errs = []
    for h in (0.2, 0.1):
        x = np.arange(0.0, 20.0, h)
        d = derivative(np.sin(x), h, order)
        exact = np.cos(x) if order == 1 else -np.sin(x)
        errs.append(np.max(np.abs(d - exact)[10:-10]))
    assert errs[1] < 1e-7
    assert errs[0] / errs[1] > 2 ** 7


def test_ghosts_complete_the_stencil_for_even_functions():
    # cos is even about 0; samples start half a cell from the mirror point
    h = 0.01
    x = (np.arange(300) + 0.5) * h
    v = np.cos(x)
    j = np.arange(4)
    left = (-h * (j + 1)[::-1], v[j][::-1])
    d = derivative(v, h, 2, left=left)
    assert np.max(np.abs(d + v)[:-10]) < 1e-10


def test_strided_stencil_matches():
    h = 1e-3
    x = np.arange(0.0, 3.0, h)
    d = derivative(np.exp(x), h, 2, spacing=np.full(len(x), 20))
    assert np.max(np.abs(d - np.exp(x))[100:-100] / np.exp(x[100:-100])) < 1e-9
