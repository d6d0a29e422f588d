"""Morse index of an equivariant hypersurface by separation into torus modes.

A Jacobi field ``f(s) cos(p phi1) cos(q phi2)`` (and its sine variants) reduces
the second variation to the one-dimensional quadratic form

    Q(f) = int (f'^2 - V_pq f^2) w ds,   V_pq = |A|^2 + Ric - p^2/a1^2 - q^2/a2^2,

and the index is the number of negative eigenvalues of Q relative to
``int f^2 w ds``, summed over modes with real multiplicities.  Each form is
discretized with linear elements on the arclength grid (stiffness from ``w``
at element midpoints, lumped mass), which gives a symmetric tridiagonal pencil
``(A, B)`` with ``B`` diagonal and positive; by Sylvester's law of inertia the
number of negative pivots of ``A - sigma B`` counts eigenvalues below sigma.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels as K
from .errors import DegenerateOrbit
from .quantities import SampleTable, second_fundamental_form, ricci_normal

__all__ = [
    "ModeProblem", "ModeEntry", "SpectralReport", "mode_potential", "mode_pencil",
    "mode_negative_count", "mode_cutoff", "morse_index", "football_truncated_count",
    "multiplicity", "NULL_TOL", "dense_negative_count",
]

NEUMANN = "Neumann"
DIRICHLET = "Dirichlet"
# eigenvalues within this distance of 0 are reported as near-null
NULL_TOL = 1e-3
JITTER = 1e-14


def multiplicity(p):
    """Real Fourier multiplicity of an angular index: cos and sin for p > 0."""
    return 1 if p == 0 else 2


@dataclass
class ModeProblem:
    """Discrete data of one separated problem.

    ``grid``, ``weight`` and ``potential`` are nodal; nodes carrying a
    Dirichlet condition are kept in the arrays and removed when assembling.
    """

    p: int
    q: int
    grid: np.ndarray
    weight: np.ndarray
    potential: np.ndarray
    bc_left: str = NEUMANN
    bc_right: str = NEUMANN

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.weight = np.asarray(self.weight, dtype=float)
        self.potential = np.asarray(self.potential, dtype=float)
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        inner = self.weight[1:-1]
        if inner.size and np.any(inner <= 0):
            raise ValueError("weight must be positive at interior nodes")


def _end_nodes(tab, side):
    """Extra node placed on the degenerate orbit at an edge or pole end."""
    info = tab.ends[0] if side == "left" else tab.ends[-1]
    if info.get("type") == "edge":
        return {"distance": float(info["distance"]), "zero": (info["axis"],)}
    if info.get("type") == "pole":
        return {"distance": float(info["distance"]), "zero": (1, 2)}
    return None


def mode_potential(samples, p, q):
    """Separated problem for the torus mode ``(p, q)``.

    ``samples`` is a SampleTable (or a ProfileCurve, converted on the fly).
    At an end that sits on a degenerate orbit a node is added on that orbit;
    it is Dirichlet when the mode index of the collapsing circle is nonzero
    (regular Jacobi fields vanish like ``a^|p|`` there) and Neumann otherwise.
    """
    tab = samples if isinstance(samples, SampleTable) else second_fundamental_form(samples)
    if p < 0 or q < 0:
        raise ValueError("mode indices must be nonnegative")
    s = np.asarray(tab.s, dtype=float)
    a1, a2 = np.asarray(tab.a1), np.asarray(tab.a2)
    base = tab.A2 + ricci_normal(tab.kind)
    with np.errstate(divide="ignore", invalid="ignore"):
        V = base - (p * p / a1 ** 2 if p else 0.0) - (q * q / a2 ** 2 if q else 0.0)
    w = np.asarray(tab.w, dtype=float)
    if np.any(~np.isfinite(V)):
        raise DegenerateOrbit("sample on a degenerate orbit; trim the curve ends")
    grid, weight, pot = [s], [w], [V]
    bcs = []
    for side in ("left", "right"):
        node = _end_nodes(tab, side)
        bc = NEUMANN
        if node is not None and node["distance"] > 0.0:
            idx = dict(zip((1, 2), (p, q)))
            dirichlet = any(idx[j] != 0 for j in node["zero"])
            bc = DIRICHLET if dirichlet else NEUMANN
            j0 = 0 if side == "left" else -1
            # the surviving radius keeps its sample value; the collapsing one drops out
            extra = base[j0]
            for j, a in ((1, a1[j0]), (2, a2[j0])):
                if j not in node["zero"] and idx[j]:
                    extra -= idx[j] ** 2 / a ** 2
            pos = s[0] - node["distance"] if side == "left" else s[-1] + node["distance"]
            if side == "left":
                grid.insert(0, [pos])
                weight.insert(0, [0.0])
                pot.insert(0, [0.0 if dirichlet else extra])
            else:
                grid.append([pos])
                weight.append([0.0])
                pot.append([0.0 if dirichlet else extra])
        bcs.append(bc)
    return ModeProblem(p, q, np.concatenate(grid), np.concatenate(weight),
                       np.concatenate(pot), bcs[0], bcs[1])


def mode_pencil(problem):
    """Tridiagonal stiffness ``A`` (as diag, off) and diagonal mass ``B``.

    Dirichlet end nodes are eliminated.  Returns ``(diag, off, mass)``.
    """
    x, w, V = problem.grid, problem.weight, problem.potential
    ln = np.diff(x)
    wm = 0.5 * (w[1:] + w[:-1])
    k = wm / ln
    mass = np.zeros(len(x))
    mass[:-1] += 0.5 * wm * ln
    mass[1:] += 0.5 * wm * ln
    diag = np.zeros(len(x))
    diag[:-1] += k
    diag[1:] += k
    diag -= V * mass
    off = -k
    lo = 1 if problem.bc_left == DIRICHLET else 0
    hi = len(x) - 1 if problem.bc_right == DIRICHLET else len(x)
    return diag[lo:hi].copy(), off[lo:hi - 1].copy(), mass[lo:hi].copy()


def _count_below(diag, off, mass, sigma):
    neg, fixes = K.ldl_negative_pivots(diag - sigma * mass, off, JITTER)
    return int(neg), int(fixes)


def mode_negative_count(problem, null_tol=NULL_TOL):
    """``(negatives, near_null)`` of a separated problem.

    ``negatives`` counts generalized eigenvalues below ``-null_tol`` and
    ``near_null`` those in ``[-null_tol, null_tol)``.
    """
    n_inner = len(problem.grid) - 2
    if n_inner < 50:
        raise ValueError("need at least 50 interior nodes")
    return _counts(problem, null_tol)[:2]


def _counts(problem, null_tol):
    diag, off, mass = mode_pencil(problem)
    lo, f1 = _count_below(diag, off, mass, -null_tol)
    hi, f2 = _count_below(diag, off, mass, null_tol)
    return lo, hi - lo, f1 + f2


def dense_negative_count(problem):
    """Oracle: negative generalized eigenvalues from a dense symmetric solver."""
    from scipy.linalg import eigh
    diag, off, mass = mode_pencil(problem)
    A = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    lam = eigh(A, np.diag(mass), eigvals_only=True)
    return int(np.sum(lam < 0.0))


def mode_cutoff(samples):
    """Mode bound beyond which the pointwise certificate ``V_pq <= 0`` holds.

    A mode with ``max(p, q) = P`` has ``V_pq <= |A|^2 + Ric - P^2/a^2`` for the
    radius ``a`` carrying ``P``; this is nonpositive everywhere once
    ``P^2 >= sup (|A|^2 + Ric) max(a1, a2)^2``.  The smallest such ``P`` is
    returned and modes up to it (inclusive) are computed.
    """
    tab = samples if isinstance(samples, SampleTable) else second_fundamental_form(samples)
    amax = np.maximum(tab.a1, tab.a2)
    sup = float(np.max((tab.A2 + ricci_normal(tab.kind)) * amax ** 2))
    return max(0, int(math.ceil(math.sqrt(max(sup, 0.0)) - 1e-12)))


@dataclass
class ModeEntry:
    p: int
    q: int
    mult: int
    neg: int
    near_null: int
    jitter_fixes: int = 0

    def to_dict(self):
        return {"p": self.p, "q": self.q, "mult": self.mult, "neg": self.neg,
                "nearNull": self.near_null}


@dataclass
class SpectralReport:
    pmax: int
    modes: list = field(default_factory=list)
    null_tol: float = NULL_TOL

    @property
    def total_index(self):
        return sum(m.mult * m.neg for m in self.modes)

    @property
    def nullity_estimate(self):
        return sum(m.mult * m.near_null for m in self.modes)

    def to_dict(self):
        return {"pmax": self.pmax, "modes": [m.to_dict() for m in self.modes],
                "totalIndex": self.total_index, "nullity": self.nullity_estimate}

    def csv_rows(self):
        yield ["p", "q", "mult", "neg", "nearNull"]
        for m in self.modes:
            yield [m.p, m.q, m.mult, m.neg, m.near_null]


def morse_index(curve, null_tol=NULL_TOL, pmax=None):
    """Index and nullity estimate summed over all modes up to the cutoff."""
    tab = curve if isinstance(curve, SampleTable) else second_fundamental_form(curve)
    P = mode_cutoff(tab) if pmax is None else int(pmax)
    report = SpectralReport(P, null_tol=null_tol)
    for p in range(P + 1):
        for q in range(P + 1):
            neg, near, fixes = _counts(mode_potential(tab, p, q), null_tol)
            report.modes.append(ModeEntry(p, q, multiplicity(p) * multiplicity(q),
                                          neg, near, fixes))
    return report


def _graded_grid(eps, n):
    """Nodes on ``[eps, pi - eps]``, geometric near both ends, uniform in the middle."""
    half = 0.5 * math.pi
    # log spacing in the distance to the nearer end, resolving the 1/theta^2 scale
    t = np.linspace(0.0, 1.0, n)
    left = eps * (half / eps) ** t
    x = np.concatenate([left, math.pi - left[-2::-1]])
    return x


def football_truncated_count(eps, p, q, c=2.0, n=4000, null_tol=0.0):
    """Negatives of the football's ``(p, q)`` problem on ``[eps, pi - eps]``.

    Dirichlet at both cut ends; the potential is
    ``3 + (c - 2 p^2 - 2 q^2)/sin^2 theta`` with weight ``2 pi^2 sin^2 theta``.
    The grid is geometric in the distance to the nearer cone point, so the
    oscillation of the supercritical ``(0, 0)`` problem is resolved uniformly
    in ``eps``.
    """
    if not 0.0 < eps < 0.3:
        raise ValueError("eps must lie in (0, 0.3)")
    x = _graded_grid(eps, n)
    sn = np.sin(x)
    w = 2.0 * math.pi ** 2 * sn ** 2
    V = 3.0 + (c - 2.0 * p * p - 2.0 * q * q) / sn ** 2
    prob = ModeProblem(p, q, x, w, V, DIRICHLET, DIRICHLET)
    diag, off, mass = mode_pencil(prob)
    neg, _ = _count_below(diag, off, mass, -null_tol)
    return neg
