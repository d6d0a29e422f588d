"""Indicial roots and weight bookkeeping for the cone points of the football.

Near a cone point the Jacobi-type operator ``J + B/rho^2`` separated into the
torus mode ``(p, q)`` acts on ``rho^t`` through the indicial polynomial

    P_pq(t) = t^2 + t + c - 2 (p^2 + q^2),       c = 2 + B.

``c = 2`` is the plain Jacobi operator and ``c = -2 b^2`` the shifted one with
``B = -2 (1 + b^2)``.  Roots come in pairs ``t, -1 - t``; the weight ``beta``
is admissible (Fredholm) when no root has real part ``beta``, and the number
of roots with real part in ``[-beta - 1, beta]`` (with torus multiplicity,
both cone points) controls the Fredholm index.
"""

from dataclasses import dataclass, field
import cmath
import math

import numpy as np

from .errors import NonFredholmWeight
from .fd import derivative
from .spectrum import multiplicity

__all__ = [
    "ConeOperatorParams", "IndicialReport", "indicial_roots", "indicial_polynomial",
    "b_star", "strip_exit_b", "locate_strip_entry", "weight_crossing_sum",
    "fredholm_index", "indicial_report", "weighted_sup_norm", "FREDHOLM_GAP",
]

FREDHOLM_GAP = 1e-9
N_CONES = 2


@dataclass(frozen=True)
class ConeOperatorParams:
    c: float
    beta: float
    q_reg: int = 3

    @property
    def b(self):
        """``b`` with ``c = -2 b^2``; ``None`` when ``c > 0``."""
        return math.sqrt(-self.c / 2.0) if self.c <= 0 else None

    @property
    def B(self):
        return self.c - 2.0

    @classmethod
    def from_b(cls, b, beta, q_reg=3):
        return cls(-2.0 * b * b, beta, q_reg)


def indicial_polynomial(t, p, q, c):
    return t * t + t + c - 2.0 * (p * p + q * q)


def indicial_roots(p, q, c):
    """Both roots, larger real part first (complex when the discriminant is negative)."""
    disc = 1.0 - 4.0 * (c - 2.0 * (p * p + q * q))
    r = cmath.sqrt(disc) if disc < 0 else math.sqrt(disc)
    return complex(-0.5 + 0.5 * r), complex(-0.5 - 0.5 * r)


def b_star(beta):
    """Threshold ``max{sqrt(3/2), sqrt((beta + 1/2)^2/2 - 1/8)}`` for ``beta > 1``."""
    if not beta > 1.0:
        raise ValueError("b_star needs beta > 1")
    return max(math.sqrt(1.5), strip_exit_b(beta))


def strip_exit_b(beta):
    """The ``b`` above which the larger ``(0, 0)`` root of ``c = -2 b^2`` exceeds ``beta``.

    The exit condition ``8 b^2 > 4 beta^2 + 4 beta`` is the same inequality as
    ``b^2 > (beta + 1/2)^2 / 2 - 1/8``.
    """
    return math.sqrt(0.5 * (beta + 0.5) ** 2 - 0.125)


def _mode_shell_limit(beta, c):
    """Largest ``p^2 + q^2`` whose roots can reach the strip."""
    return (beta + 1.0) ** 2 + (beta + 1.0) + c


def _modes(beta, c):
    n_max = max(0.0, _mode_shell_limit(beta, c) / 2.0)
    pm = int(math.floor(math.sqrt(n_max))) + 1
    for p in range(pm + 1):
        for q in range(pm + 1):
            if 2.0 * (p * p + q * q) - c <= (beta + 1.0) ** 2 + (beta + 1.0):
                yield p, q


def _crossing(beta, c, check=True):
    lo, hi = -beta - 1.0, beta
    total = 0
    entries = []
    for p, q in _modes(beta, c):
        roots = indicial_roots(p, q, c)
        mult = multiplicity(p) * multiplicity(q)
        if check:
            for t in roots:
                if abs(t.real - beta) < FREDHOLM_GAP or abs(t.real - lo) < FREDHOLM_GAP:
                    raise NonFredholmWeight(
                        f"beta={beta} is an indicial real part (mode ({p},{q}))",
                        beta=beta, c=c, p=p, q=q, root=[t.real, t.imag])
        inside = sum(1 for t in roots if lo <= t.real <= hi)
        total += mult * inside
        entries.append((p, q, roots, mult))
    return N_CONES * total, entries


def weight_crossing_sum(beta, c):
    """Roots in the closed strip ``[-beta-1, beta]``, with multiplicity, both cones."""
    return _crossing(beta, c)[0]


def fredholm_index(beta, c):
    """``-crossing_sum / 2``: more decay, smaller index."""
    cs = weight_crossing_sum(beta, c)
    assert cs % 2 == 0, "roots pair up, so the crossing sum is even"
    return -cs // 2


def locate_strip_entry(beta, tol=1e-12):
    """Bisect in ``b`` for the point where the strip stops being empty (``c = -2b^2``)."""
    lo, hi = 0.0, 1.0
    while _crossing(beta, -2.0 * hi * hi, check=False)[0] > 0:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _crossing(beta, -2.0 * mid * mid, check=False)[0] > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class IndicialReport:
    c: float
    beta: float
    entries: list = field(default_factory=list)
    crossing_sum: int = 0

    @property
    def strip(self):
        return (-self.beta - 1.0, self.beta)

    @property
    def fredholm_index(self):
        return -self.crossing_sum // 2

    @property
    def isomorphism(self):
        return self.crossing_sum == 0

    def to_dict(self):
        return {
            "c": self.c, "beta": self.beta, "strip": list(self.strip),
            "entries": [{"p": p, "q": q, "re1": r[0].real, "im1": r[0].imag,
                         "re2": r[1].real, "im2": r[1].imag, "mult": m}
                        for p, q, r, m in self.entries],
            "crossingSum": self.crossing_sum, "fredholmIndex": self.fredholm_index,
            "isomorphism": self.isomorphism,
        }


def indicial_report(beta, c):
    cs, entries = _crossing(beta, c)
    return IndicialReport(float(c), float(beta), entries, cs)


def weighted_sup_norm(values, rho, h, beta, k=0, left=None, right=None, ghost=None,
                      spacing=None):
    """Discrete ``C^k_beta`` norm ``sum_{j<=k} sup rho^(j - beta) |d^j u / ds^j|``.

    Derivatives are along arclength with the finite differences of
    :mod:`morseforge.fd`; ``left``/``right`` optionally pass ghost data for the
    first derivative stencils, or ``ghost(d, j)`` returns ``(left, right)`` for
    the stencil of the ``j``-th derivative given the ``(j-1)``-th derivative
    ``d``.  ``spacing`` is passed to the stencils.  Hoelder seminorms are not
    included.
    """
    if not 0 <= k <= 4:
        raise ValueError("k must be in 0..4")
    u = np.asarray(values, dtype=float)
    rho = np.asarray(rho, dtype=float)
    total = float(np.max(np.abs(u) * rho ** (-beta)))
    d = u
    for j in range(1, k + 1):
        if ghost is not None:
            lg, rg = ghost(d, j - 1)
        else:
            lg, rg = (left, right) if j == 1 else (None, None)
        d = derivative(d, h, 1, left=lg, right=rg, spacing=spacing)
        total += float(np.max(np.abs(d) * rho ** (j - beta)))
    return total
