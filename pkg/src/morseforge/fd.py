"""Finite-difference derivatives along sampled curves.

Interior samples use the 9-point central stencil (eighth order).  Near an end
the stencil is completed with ghost values when the caller can supply them
(reflection across an edge the curve hits perpendicularly), otherwise it is
shifted to one side.  Weights for irregular node sets come from Fornberg's
recursion.
"""

import numpy as np

__all__ = ["fornberg_weights", "derivative", "HALF_WIDTH"]

HALF_WIDTH = 4
_C1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_C2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])


def fornberg_weights(x0, nodes, order):
    """Weights ``c`` with ``sum(c * f(nodes)) ~ f^(order)(x0)``."""
    x = np.asarray(nodes, dtype=float)
    n = len(x)
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def derivative(values, h, order=1, left=None, right=None, spacing=None):
    """Derivative of uniformly sampled ``values`` (first axis is arclength).

    ``left``/``right`` are optional ``(positions, ghost_values)`` pairs with
    positions measured in the same arclength units as ``h * index`` (the first
    sample sits at 0).  ``spacing`` optionally gives a per-sample integer
    stride multiplying ``h`` for the interior stencil (used to keep round-off
    under control where the curve varies slowly).
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    w = HALF_WIDTH
    coef = _C1 if order == 1 else _C2
    out = np.full_like(v, np.nan)
    idx = np.arange(n)
    if spacing is None:
        stride = np.ones(n, dtype=int)
    else:
        stride = np.maximum(1, np.asarray(spacing, dtype=int))
    # largest admissible stride at each sample
    room = np.minimum(idx, n - 1 - idx) // w
    stride = np.minimum(stride, np.maximum(room, 1))
    inner = room >= 1
    for st in np.unique(stride[inner]):
        sel = idx[inner & (stride == st)]
        acc = np.zeros((len(sel),) + v.shape[1:])
        for j, cj in enumerate(coef):
            if cj != 0.0:
                acc += cj * v[sel + (j - w) * st]
        out[sel] = acc / (st * h) ** order
    # ends: ghost-completed or one-sided irregular stencils
    pos = h * idx.astype(float)
    for side in ("left", "right"):
        ghost = left if side == "left" else right
        ends = idx[:w] if side == "left" else idx[n - w:]
        for i in ends:
            if inner[i]:
                continue
            if ghost is not None:
                gp, gv = ghost
                gp = np.asarray(gp, dtype=float)
                gv = np.asarray(gv, dtype=float)
                npos = np.concatenate([gp, pos]) if side == "left" else np.concatenate([pos, gp])
                nval = np.concatenate([gv, v]) if side == "left" else np.concatenate([v, gv])
            else:
                npos, nval = pos, v
            near = np.argsort(np.abs(npos - pos[i]), kind="stable")[: 2 * w + 1]
            near = np.sort(near)
            wts = fornberg_weights(pos[i], npos[near], order)
            out[i] = np.tensordot(wts, nval[near], axes=(0, 0))
    return out
