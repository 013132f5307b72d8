"""Independent reference computations.

Only numpy/scipy are used here; the package under test supplies nothing but
the ``(A, b)`` arrays of its polytopes.
"""
import itertools

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection


def vertices(A, b):
    """Vertices of a bounded full-dimensional ``{x | A x <= b}``."""
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1
    norms = np.linalg.norm(A, axis=1, keepdims=True)
    res = linprog(c, np.hstack([A, norms]), b, bounds=[(None, None)] * n + [(0, 1e6)])
    center = res.x[:n]
    hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), center)
    pts = hs.intersections
    return pts[ConvexHull(pts).vertices]


def random_polytope(rng, n, kind="hull"):
    """Bounded full-dimensional polytope as an ``(A, b)`` pair."""
    if kind == "box":
        lo = rng.uniform(-2, 1, n)
        hi = lo + rng.uniform(0.2, 2, n)
        A = np.vstack([np.eye(n), -np.eye(n)])
        return A, np.concatenate([hi, -lo])
    pts = rng.normal(size=(n + 3 + rng.integers(6), n)) + rng.uniform(-1, 1, n)
    hull = ConvexHull(pts)
    eq = hull.equations
    return eq[:, :-1], -eq[:, -1]


def support(points, d):
    return float(np.max(points @ d))


def vertex_sum_support(VP, VQ, d):
    """Support of ``P + Q`` from the pairwise vertex sums."""
    sums = (VP[:, None, :] + VQ[None, :, :]).reshape(-1, VP.shape[1])
    return support(ConvexHull(sums).points, d)


def in_pontryagin(x, A, b, VW, tol=1e-9):
    """``x in P - W`` iff ``x + w in P`` for every vertex ``w`` of ``W``."""
    return all(np.all(A @ (x + w) <= b + tol) for w in VW)


def has_robust_input(x, Ad, Bd, PA, Pb, UA, Ub, VW, tol=1e-9):
    """Per-point check: some ``u in U`` puts ``Ad x + Bd u + w`` in ``P`` for all vertices ``w``."""
    m = Bd.shape[1]
    rows, rhs = [UA], [Ub]
    for w in VW:
        rows.append(PA @ Bd)
        rhs.append(Pb - PA @ (Ad @ x + w))
    res = linprog(np.zeros(m), np.vstack(rows), np.concatenate(rhs) + tol,
                  bounds=[(None, None)] * m, method="highs")
    return res.status == 0


def box_vertices(lo, hi):
    return np.array(list(itertools.product(*zip(lo, hi))), float)


def inf_distance(x, A, b):
    """Infinity-norm distance from ``x`` to ``{y | A y <= b}``."""
    n = len(x)
    c = np.r_[np.zeros(n), 1.0]
    A_ub = np.vstack([np.hstack([A, np.zeros((A.shape[0], 1))]),
                      np.hstack([np.eye(n), -np.ones((n, 1))]),
                      np.hstack([-np.eye(n), -np.ones((n, 1))])])
    b_ub = np.r_[b, x, -x]
    return linprog(c, A_ub, b_ub, bounds=[(None, None)] * (n + 1)).fun


def sample_in(A, b, rng, k, lo, hi):
    """Rejection samples of ``{A x <= b}`` inside the box ``[lo, hi]``."""
    out = []
    while len(out) < k:
        x = rng.uniform(lo, hi, size=(4 * k, len(lo)))
        out.extend(x[np.all(x @ A.T <= b, axis=1)])
    return np.array(out[:k])


def grid_invariant(Ad, Bd, lo, hi, u_lo, u_hi, w_half, h=0.05, nu=201, max_iter=500):
    """Brute-force controlled invariance on a grid over the box ``[lo, hi]`` (2D, m = 1).

    A grid point survives while some sampled input sends every disturbance
    vertex into a surviving grid cell.
    """
    g = [np.arange(l, u + 1e-9, h) for l, u in zip(lo, hi)]
    X1, X2 = np.meshgrid(*g, indexing="ij")
    P = np.stack([X1.ravel(), X2.ravel()], 1)
    keep = np.ones(len(P), bool)
    us = np.linspace(u_lo, u_hi, nu)
    ws = box_vertices([-w_half] * 2, [w_half] * 2)
    base = P @ Ad.T
    Y = base[:, None, None, :] + (us[:, None] * Bd[:, 0])[None, :, None, :] + ws[None, None]
    inside = np.all((Y >= np.array(lo) - 1e-12) & (Y <= np.array(hi) + 1e-12), axis=-1)
    ij = np.rint((Y - np.array(lo)) / h).astype(int)
    ij[..., 0] = np.clip(ij[..., 0], 0, len(g[0]) - 1)
    ij[..., 1] = np.clip(ij[..., 1], 0, len(g[1]) - 1)
    k = ij[..., 0] * len(g[1]) + ij[..., 1]
    for _ in range(max_iter):
        new = np.all(inside & keep[k], axis=2).any(axis=1) & keep
        if np.array_equal(new, keep):
            break
        keep = new
    return P, keep
