r"""H-representation polyhedral arithmetic.

Every set manipulated by the synthesis layer is either a :class:`Polytope`
``{x | A x <= b}`` or a :class:`PCollection` (finite union of polytopes).
Linear programs are solved with the HiGHS backend of :func:`scipy.optimize.linprog`;
vertex enumeration and convex hulls go through qhull (:mod:`scipy.spatial`).

Lower-dimensional sets (points, segments) are ordinary polytopes carrying
pairs of opposite halfspaces, reported by :attr:`Polytope.eq_pairs`.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from . import tolerances as tol

logger = logging.getLogger(__name__)

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


class GeometryError(Exception):
    """Base class for geometry failures."""


class LpBackendError(GeometryError):
    """The LP solver failed; ``problem`` holds the offending subproblem."""

    def __init__(self, message, problem=None):
        super().__init__(message)
        self.problem = problem


class DimensionMismatchError(GeometryError, ValueError):
    pass


class UnsupportedOperandError(GeometryError, ValueError):
    pass


class VertexCapError(GeometryError):
    pass


class IndeterminateInclusionError(GeometryError):
    """Region subtraction exceeded its piece cap; treat as "not contained"."""


# ---------------------------------------------------------------------------
# LP contract


@dataclass(frozen=True)
class LpProblem:
    """``min c.x`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq``; free variables
    unless ``bounds`` is given.  ``c=None`` is a pure feasibility problem."""

    A_ub: np.ndarray
    b_ub: np.ndarray
    c: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: Optional[Sequence] = None


@dataclass(frozen=True)
class LpOutcome:
    status: str  # "feasible" | "infeasible" | "unbounded"
    point: Optional[np.ndarray] = None
    value: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def solve_lp(problem: LpProblem) -> LpOutcome:
    nvar = problem.A_ub.shape[1] if problem.A_ub is not None and problem.A_ub.size else (
        problem.A_eq.shape[1] if problem.A_eq is not None else len(problem.c))
    c = np.zeros(nvar) if problem.c is None else np.asarray(problem.c, float)
    bounds = problem.bounds if problem.bounds is not None else [(None, None)] * nvar
    A_ub = problem.A_ub if problem.A_ub is not None and problem.A_ub.size else None
    b_ub = problem.b_ub if A_ub is not None else None
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=problem.A_eq, b_eq=problem.b_eq,
                  bounds=bounds, method="highs", options=_HIGHS_OPTIONS)
    if res.status == 0:
        return LpOutcome("feasible", np.asarray(res.x), float(res.fun))
    if res.status == 2:
        return LpOutcome("infeasible")
    if res.status == 3:
        return LpOutcome("unbounded")
    raise LpBackendError(f"LP backend failed: {res.message}", problem)


def _lp(c, A_ub, b_ub, A_eq=None, b_eq=None, bounds=None) -> LpOutcome:
    return solve_lp(LpProblem(np.asarray(A_ub, float), np.asarray(b_ub, float),
                              None if c is None else np.asarray(c, float),
                              A_eq, b_eq, bounds))


# ---------------------------------------------------------------------------
# Polytope


@dataclass(frozen=True)
class Halfspace:
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        if not np.any(np.asarray(self.normal) != 0):
            raise ValueError("halfspace normal must be nonzero")


def _normalize_rows(A, b, zero_tol=1e-12):
    """Scale rows to unit infinity norm; resolve all-zero rows.

    Returns ``(A, b, infeasible)``.
    """
    scale = np.abs(A).max(axis=1) if A.size else np.zeros(A.shape[0])
    zero = scale <= zero_tol
    infeasible = bool(np.any(b[zero] < -tol.TOL_LP))
    keep = ~zero
    A, b, scale = A[keep], b[keep], scale[keep]
    return A / scale[:, None], b / scale, infeasible


def _dedupe(A, b, atol=1e-10):
    """Drop repeated normals, keeping the tightest offset."""
    if len(b) < 2:
        return A, b
    order = np.lexsort(np.round(A, 9).T[::-1])
    A, b = A[order], b[order]
    keep_A, keep_b = [A[0]], [b[0]]
    for a_row, b_val in zip(A[1:], b[1:]):
        if np.max(np.abs(a_row - keep_A[-1])) <= atol:
            keep_b[-1] = min(keep_b[-1], b_val)
        else:
            keep_A.append(a_row)
            keep_b.append(b_val)
    # rounding can separate near-equal rows; a quadratic pass catches them
    A, b = np.array(keep_A), np.array(keep_b)
    out_A, out_b = [], []
    for a_row, b_val in zip(A, b):
        for k, prev in enumerate(out_A):
            if np.max(np.abs(a_row - prev)) <= atol:
                out_b[k] = min(out_b[k], b_val)
                break
        else:
            out_A.append(a_row)
            out_b.append(b_val)
    return np.array(out_A), np.array(out_b)


class Polytope:
    """Convex polyhedron ``{x | A x <= b}`` (bounded unless stated otherwise).

    Instances are immutable; derived data (emptiness, vertices, boundedness)
    is cached on first use.
    """

    __slots__ = ("A", "b", "minimal", "_empty", "_bounded", "_vertices", "_interior")

    def __init__(self, A, b, *, minimal: bool = False, _normalized: bool = False):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
        if A.shape[0] != b.shape[0]:
            raise DimensionMismatchError(f"A has {A.shape[0]} rows but b has {b.shape[0]}")
        self._empty = None
        if not _normalized:
            A, b, infeasible = _normalize_rows(A, b)
            if infeasible:
                A, b = _empty_rows(A.shape[1] if A.ndim == 2 else 1)
                self._empty = True
        A.setflags(write=False)
        b.setflags(write=False)
        self.A = A
        self.b = b
        self.minimal = minimal
        self._bounded = None
        self._vertices = None
        self._interior = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_bounds(cls, lo, hi) -> "Polytope":
        lo, hi = np.asarray(lo, float).ravel(), np.asarray(hi, float).ravel()
        n = lo.size
        A = np.vstack([np.eye(n), -np.eye(n)])
        return cls(A, np.concatenate([hi, -lo]), minimal=bool(np.all(hi > lo)))

    @classmethod
    def box(cls, center, radius) -> "Polytope":
        """Infinity-norm ball ``center + radius * B^n``."""
        c = np.asarray(center, float).ravel()
        return cls.from_bounds(c - radius, c + radius)

    @classmethod
    def point(cls, x) -> "Polytope":
        return cls.box(x, 0.0)

    @classmethod
    def universe(cls, dim: int) -> "Polytope":
        return cls(np.zeros((0, dim)), np.zeros(0), minimal=True)

    @classmethod
    def empty(cls, dim: int) -> "Polytope":
        P = cls(*_empty_rows(dim), _normalized=True)
        P._empty = True
        return P

    @classmethod
    def from_vertices(cls, points) -> "Polytope":
        return convex_hull(points)

    # -- basic attributes -------------------------------------------------
    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def numh(self) -> int:
        return self.A.shape[0]

    @property
    def halfspaces(self) -> list:
        return [Halfspace(a.copy(), float(c)) for a, c in zip(self.A, self.b)]

    @property
    def eq_pairs(self) -> list:
        """Index pairs of opposite halfspaces pinning the set to a hyperplane."""
        pairs = []
        for i in range(self.numh):
            for j in range(i + 1, self.numh):
                if (np.max(np.abs(self.A[i] + self.A[j])) <= 1e-10
                        and abs(self.b[i] + self.b[j]) <= tol.TOL_GEOM):
                    pairs.append((i, j))
        return pairs

    def __repr__(self):
        return f"Polytope(dim={self.dim}, numh={self.numh})"

    # -- predicates -------------------------------------------------------
    def is_empty(self) -> bool:
        if self._empty is None:
            if self.numh == 0:
                self._empty = False
            else:
                self._empty = not _lp(None, self.A, self.b).feasible
        return self._empty

    def contains(self, x, tol_geom: float = None) -> bool:
        x = np.asarray(x, float).ravel()
        if x.size != self.dim:
            raise DimensionMismatchError(f"point of dim {x.size} vs polytope dim {self.dim}")
        t = tol.TOL_GEOM if tol_geom is None else tol_geom
        return bool(np.all(self.A @ x <= self.b + t))

    def is_bounded(self) -> bool:
        if self._bounded is None:
            if self.is_empty():
                self._bounded = True
            else:
                self._bounded = all(
                    _lp(s * e, self.A, self.b).status != "unbounded"
                    for e in np.eye(self.dim) for s in (1.0, -1.0))
        return self._bounded

    def support(self, direction) -> float:
        """``max_{x in P} d.x``; ``-inf`` when empty, ``inf`` when unbounded."""
        d = np.asarray(direction, float).ravel()
        if self._vertices is not None:
            if len(self._vertices) == 0:
                return -np.inf
            return float(np.max(self._vertices @ d))
        out = _lp(-d, self.A, self.b)
        if out.status == "infeasible":
            return -np.inf
        if out.status == "unbounded":
            return np.inf
        return -out.value

    def chebyshev(self):
        """Center and inradius for the infinity-normalized rows (radius capped at 1e6)."""
        n = self.dim
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A = np.hstack([self.A, np.ones((self.numh, 1))])
        out = _lp(c, A, self.b, bounds=[(None, None)] * n + [(None, 1e6)])
        if not out.feasible:
            return None, -np.inf
        return out.point[:n], out.point[n]

    def vertices(self) -> np.ndarray:
        """Vertex array (k x n); empty array for the empty set."""
        if self._vertices is None:
            self._vertices = _enumerate_vertices(self)
            self._vertices.setflags(write=False)
        return self._vertices

    # -- algebra ----------------------------------------------------------
    def translate(self, v) -> "Polytope":
        v = np.asarray(v, float).ravel()
        return Polytope(self.A, self.b + self.A @ v, minimal=self.minimal, _normalized=True)

    def __and__(self, other: "Polytope") -> "Polytope":
        _check_dim(self, other)
        return Polytope(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]),
                        _normalized=True)

    def subset_of(self, other: "Polytope", tol_geom: float = None) -> bool:
        """Convex inclusion by support functions (one LP per row of ``other``)."""
        _check_dim(self, other)
        if self.is_empty():
            return True
        t = tol.TOL_GEOM if tol_geom is None else tol_geom
        return all(self.support(a) <= c + t for a, c in zip(other.A, other.b))


def _empty_rows(dim):
    A = np.zeros((2, dim))
    A[0, 0], A[1, 0] = 1.0, -1.0
    return A, np.array([-1.0, -1.0])


def _check_dim(P, Q):
    if P.dim != Q.dim:
        raise DimensionMismatchError(f"dimension mismatch: {P.dim} vs {Q.dim}")


# ---------------------------------------------------------------------------
# reduction and vertex enumeration


def reduce(P: Polytope) -> Polytope:
    """Irredundant H-representation of the same point set.

    A row is kept iff maximizing its normal over the remaining rows exceeds
    its offset by more than ``TOL_LP``.
    """
    if P.minimal:
        return P
    if P.is_empty():
        return Polytope.empty(P.dim)
    A, b = _dedupe(P.A, P.b)
    keep = np.ones(len(b), dtype=bool)
    for i in range(len(b)):
        keep[i] = False
        rows = np.flatnonzero(keep)
        A_i = np.vstack([A[rows], A[i]])
        b_i = np.concatenate([b[rows], [b[i] + 1.0]])
        out = _lp(-A[i], A_i, b_i)
        if out.status == "infeasible":
            raise LpBackendError("reduce: feasible polytope became infeasible",
                                 LpProblem(A_i, b_i, -A[i]))
        if -out.value > b[i] + tol.TOL_LP:
            keep[i] = True
    R = Polytope(A[keep], b[keep], minimal=True, _normalized=True)
    R._empty = False
    return R


def _affine_hull(P: Polytope):
    """Return ``(x0, N)`` with ``aff(P) = x0 + range(N)``; ``N`` has orthonormal columns."""
    center, radius = P.chebyshev()
    if center is None:
        raise GeometryError("affine hull of an empty polytope")
    if radius > tol.TOL_LP:
        return center, np.eye(P.dim)
    eq_rows = []
    for i, (a, c) in enumerate(zip(P.A, P.b)):
        out = _lp(a, P.A, P.b)
        if out.feasible and out.value >= c - tol.TOL_LP:
            eq_rows.append(i)
    if not eq_rows:
        return center, np.eye(P.dim)
    N = null_space(P.A[eq_rows], rcond=1e-9)
    return center, N


def _enumerate_vertices(P: Polytope) -> np.ndarray:
    if P.is_empty():
        return np.zeros((0, P.dim))
    if not P.is_bounded():
        raise UnsupportedOperandError("vertex enumeration of an unbounded polyhedron")
    x0, N = _affine_hull(P)
    r = N.shape[1]
    if r == 0:
        return x0[None, :]
    G = P.A @ N
    h = P.b - P.A @ x0
    live = np.abs(G).max(axis=1) > 1e-9
    G, h = G[live], h[live]
    if r == 1:
        g = G[:, 0]
        hi = np.min(h[g > 0] / g[g > 0])
        lo = np.max(h[g < 0] / g[g < 0])
        if hi - lo <= tol.TOL_LP:
            return (x0 + N[:, 0] * 0.5 * (lo + hi))[None, :]
        return np.array([x0 + N[:, 0] * lo, x0 + N[:, 0] * hi])
    # interior point in the reduced coordinates
    inner = Polytope(G, h)
    yc, rad = inner.chebyshev()
    if yc is None or rad <= 1e-12:
        # numerically flat; fall back to the point
        return x0[None, :]
    halfspaces = np.hstack([inner.A, -inner.b[:, None]])
    try:
        hs = HalfspaceIntersection(halfspaces, yc)
    except QhullError as exc:  # pragma: no cover - qhull precision edge
        raise GeometryError(f"vertex enumeration failed: {exc}") from exc
    Y = hs.intersections
    if len(Y) > tol.VERTEX_CAP:
        raise VertexCapError(f"{len(Y)} vertices exceed cap {tol.VERTEX_CAP}")
    X = x0 + Y @ N.T
    return _unique_points(X)


def _unique_points(X, atol=1e-9):
    out = []
    for x in X:
        if not any(np.max(np.abs(x - y)) <= atol * max(1.0, np.max(np.abs(x))) for y in out):
            out.append(x)
    return np.array(out)


def convex_hull(points) -> Polytope:
    """Minimal H-representation of ``conv(points)``, with equality pairs for
    rank-deficient point sets."""
    X = np.atleast_2d(np.asarray(points, float))
    k, n = X.shape
    if k == 0:
        raise ValueError("convex hull of no points")
    c = X.mean(axis=0)
    D = X - c
    scale = max(1.0, float(np.abs(X).max()))
    if k == 1 or np.abs(D).max() <= 1e-12 * scale:
        P = Polytope.point(c)
        P._vertices = c[None, :]
        return P
    _, s, Vt = np.linalg.svd(D, full_matrices=True)
    r = int(np.sum(s > 1e-9 * scale))
    N, M = Vt[:r].T, Vt[r:].T
    Y = D @ N
    rows_A, rows_b = [], []
    if r == 1:
        lo, hi = Y[:, 0].min(), Y[:, 0].max()
        rows_A += [N[:, 0], -N[:, 0]]
        rows_b += [hi + N[:, 0] @ c, -(lo + N[:, 0] @ c)]
    else:
        try:
            hull = ConvexHull(Y)
        except QhullError as exc:  # pragma: no cover
            raise GeometryError(f"convex hull failed: {exc}") from exc
        g, off = hull.equations[:, :r], hull.equations[:, r]
        for gi, oi in zip(g, off):
            a = N @ gi
            rows_A.append(a)
            rows_b.append(-oi + a @ c)
    for v in M.T:
        rows_A += [v, -v]
        rows_b += [v @ c, -(v @ c)]
    A, b, _ = _normalize_rows(np.array(rows_A), np.array(rows_b))
    A, b = _dedupe(A, b, atol=1e-8)
    P = Polytope(A, b, minimal=True, _normalized=True)
    P._empty = False
    P._bounded = True
    return P


# ---------------------------------------------------------------------------
# set operations


def is_empty(P: Polytope) -> bool:
    return P.is_empty()


def contains_point(P: Polytope, x) -> bool:
    return P.contains(x)


def minkowski_sum(P: Polytope, Q: Polytope) -> Polytope:
    """``{p + q}`` via pairwise vertex sums and a convex hull."""
    _check_dim(P, Q)
    for S in (P, Q):
        if not S.is_bounded():
            raise UnsupportedOperandError("Minkowski sum needs bounded operands")
    if P.is_empty() or Q.is_empty():
        return Polytope.empty(P.dim)
    VP, VQ = P.vertices(), Q.vertices()
    if len(VQ) == 1:
        return reduce(P).translate(VQ[0])
    if len(VP) == 1:
        return reduce(Q).translate(VP[0])
    if len(VP) * len(VQ) > tol.VERTEX_CAP:
        raise VertexCapError(f"{len(VP) * len(VQ)} vertex sums exceed cap {tol.VERTEX_CAP}")
    sums = (VP[:, None, :] + VQ[None, :, :]).reshape(-1, P.dim)
    return convex_hull(sums)


def pontryagin_diff(P: Polytope, W: Polytope) -> Polytope:
    """``{x | x + W subset P}`` by tightening each offset with the support of W."""
    _check_dim(P, W)
    if W.is_empty():
        raise UnsupportedOperandError("Pontryagin difference by the empty set")
    if not W.is_bounded():
        raise UnsupportedOperandError("Pontryagin difference needs bounded W")
    h = np.array([W.support(a) for a in P.A])
    if np.all(np.abs(h) <= 0.0):
        return P
    return Polytope(P.A, P.b - h, _normalized=True)


def linear_preimage(A, P: Polytope) -> Polytope:
    """``{x | A x in P}``; may be unbounded when A is singular."""
    A = np.atleast_2d(np.asarray(A, float))
    if A.shape[0] != P.dim:
        raise DimensionMismatchError(f"matrix with {A.shape[0]} rows vs polytope dim {P.dim}")
    return Polytope(P.A @ A, P.b)


def linear_image(B, U: Polytope) -> Polytope:
    """``{B u | u in U}`` by mapping the vertices of U."""
    B = np.atleast_2d(np.asarray(B, float))
    if B.shape[1] != U.dim:
        raise DimensionMismatchError(f"matrix with {B.shape[1]} columns vs polytope dim {U.dim}")
    if not U.is_bounded():
        raise UnsupportedOperandError("linear image needs a bounded operand")
    if U.is_empty():
        return Polytope.empty(B.shape[0])
    return convex_hull(U.vertices() @ B.T)


def intersect_polytopes(P: Polytope, Q: Polytope) -> Optional[Polytope]:
    R = P & Q
    if R.is_empty():
        return None
    return reduce(R)


# ---------------------------------------------------------------------------
# P-collections


class PCollection:
    """Finite union of polytopes of a common dimension."""

    __slots__ = ("dim", "members")

    def __init__(self, dim: int, members: Iterable[Polytope] = ()):
        members = tuple(members)
        for P in members:
            if P.dim != dim:
                raise DimensionMismatchError(f"member of dim {P.dim} in collection of dim {dim}")
        self.dim = dim
        self.members = members

    @classmethod
    def of(cls, *polys: Polytope) -> "PCollection":
        return cls(polys[0].dim, polys)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __repr__(self):
        return f"PCollection(dim={self.dim}, num={self.num}, larg={self.larg})"

    @property
    def num(self) -> int:
        return len(self.members)

    @property
    def larg(self) -> int:
        return max((P.numh for P in self.members), default=0)

    def is_empty(self) -> bool:
        return all(P.is_empty() for P in self.members)

    def contains(self, x, tol_geom: float = None) -> bool:
        return any(P.contains(x, tol_geom) for P in self.members)

    def union(self, other: "PCollection") -> "PCollection":
        if other.dim != self.dim:
            raise DimensionMismatchError("dimension mismatch in union")
        return PCollection(self.dim, self.members + other.members)

    def map(self, fn) -> "PCollection":
        """Apply ``fn`` member-wise, dropping empty and ``None`` results."""
        out = []
        for P in self.members:
            R = fn(P)
            if R is not None and not R.is_empty():
                out.append(R)
        return PCollection(self.dim, out)

    def normalized(self, merge: bool = True) -> "PCollection":
        """Reduced members, empties and subsumed members removed, canonically
        sorted; with ``merge`` pairs whose union is convex are fused."""
        members = [reduce(P) for P in self.members if not P.is_empty()]
        members = _drop_subsumed(members)
        if merge:
            members = _merge_convex(members)
        members.sort(key=_canonical_key)
        return PCollection(self.dim, members)


def _canonical_key(P: Polytope):
    return (P.numh, tuple(np.round(np.concatenate([P.A.ravel(), P.b]), 8)))


def _drop_subsumed(members):
    out = []
    for i, P in enumerate(members):
        subsumed = False
        for j, Q in enumerate(members):
            if i == j:
                continue
            if P.subset_of(Q, tol.TOL_INCL * 10):
                # keep the first of mutually equal members
                if j < i or not Q.subset_of(P, tol.TOL_INCL * 10):
                    subsumed = True
                    break
        if not subsumed:
            out.append(P)
    return out


def _merge_convex(members):
    """Greedily replace two members by their hull when the hull adds nothing."""
    members = list(members)
    changed = True
    while changed and len(members) > 1:
        changed = False
        for i, j in itertools.combinations(range(len(members)), 2):
            P, Q = members[i], members[j]
            if not (P.is_bounded() and Q.is_bounded()):
                continue
            if intersect_polytopes(P, Q) is None and not _touching(P, Q):
                continue
            H = convex_hull(np.vstack([P.vertices(), Q.vertices()]))
            try:
                ok = _covered(H, [P, Q], tol.TOL_INCL)
            except IndeterminateInclusionError:
                ok = False
            if ok:
                members = [M for k, M in enumerate(members) if k not in (i, j)] + [H]
                changed = True
                break
    return members


def _touching(P, Q):
    # intersection of slightly inflated copies
    R = Polytope(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]) + 1e-7, _normalized=True)
    return not R.is_empty()


def intersect(U1: PCollection, U2: PCollection) -> PCollection:
    """Pairwise member intersections, empties dropped, members reduced."""
    if U1.dim != U2.dim:
        raise DimensionMismatchError("dimension mismatch in intersect")
    out = []
    for P in U1.members:
        for Q in U2.members:
            R = intersect_polytopes(P, Q)
            if R is not None:
                out.append(R)
    return PCollection(U1.dim, out)


def _depth(closed_A, closed_b, strict_A, strict_b, cap=1.0, with_point=False):
    """``max t`` with ``closed_A x <= closed_b`` and ``strict_A x >= strict_b + t``."""
    n = closed_A.shape[1] if closed_A.size else strict_A.shape[1]
    A = np.vstack([
        np.hstack([closed_A, np.zeros((closed_A.shape[0], 1))]),
        np.hstack([-strict_A, np.ones((strict_A.shape[0], 1))]),
    ])
    b = np.concatenate([closed_b, -strict_b])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    out = _lp(c, A, b, bounds=[(None, None)] * n + [(None, cap)])
    if not out.feasible:
        return (-np.inf, None) if with_point else -np.inf
    return (out.point[-1], out.point[:-1]) if with_point else out.point[-1]


def _covered(P: Polytope, outers: Sequence[Polytope], tol_incl: float,
             piece_cap: int = None) -> bool:
    return _subtract(P, outers, tol_incl, piece_cap) is None


def uncovered_point(P: Polytope, outers: Sequence[Polytope], tol_incl: float = None,
                    piece_cap: int = None):
    """A point of ``P`` outside every member of ``outers``, or ``None``."""
    t = tol.TOL_INCL if tol_incl is None else tol_incl
    return _subtract(P, outers, t, piece_cap)


def _subtract(P: Polytope, outers: Sequence[Polytope], tol_incl: float,
              piece_cap: int = None):
    """Region subtraction ``P minus union(outers)``; a witness point of the
    remainder, or ``None`` if ``P`` is covered.

    A piece survives when some point of it lies outside every subtracted
    member by more than ``tol_incl``.
    """
    cap = tol.PIECE_CAP if piece_cap is None else piece_cap
    if P.is_empty():
        return None
    n = P.dim
    # each piece: (closed A, closed b, strict A, strict b)
    pieces = [(P.A, P.b, np.zeros((0, n)), np.zeros(0))]
    for Q in outers:
        if Q.is_empty():
            continue
        nxt = []
        for cA, cb, sA, sb in pieces:
            # does Q cut this piece at all?
            inner_A = np.vstack([cA, Q.A])
            inner_b = np.concatenate([cb, Q.b])
            if sA.shape[0]:
                if _depth(inner_A, inner_b, sA, sb) <= tol_incl:
                    nxt.append((cA, cb, sA, sb))
                    continue
            elif Polytope(inner_A, inner_b, _normalized=True).is_empty():
                nxt.append((cA, cb, sA, sb))
                continue
            for k in range(Q.numh):
                nA = np.vstack([cA, Q.A[:k]])
                nb = np.concatenate([cb, Q.b[:k] + tol_incl])
                tA = np.vstack([sA, Q.A[k]])
                tb = np.concatenate([sb, [Q.b[k]]])
                if _depth(nA, nb, tA, tb) > tol_incl:
                    nxt.append((nA, nb, tA, tb))
        pieces = nxt
        if not pieces:
            return None
        if len(pieces) > cap:
            raise IndeterminateInclusionError(f"region subtraction exceeded {cap} pieces")
    cA, cb, sA, sb = pieces[0]
    if sA.shape[0]:
        return _depth(cA, cb, sA, sb, with_point=True)[1]
    return P.chebyshev()[0]


def contains_set(inner: PCollection, outer: PCollection, tol_incl: float = None) -> bool:
    """True iff every member of ``inner`` lies inside the union ``outer``."""
    if inner.dim != outer.dim:
        raise DimensionMismatchError("dimension mismatch in contains_set")
    t = tol.TOL_INCL if tol_incl is None else tol_incl
    outers = [Q for Q in outer.members if not Q.is_empty()]
    for P in inner.members:
        if P.is_empty():
            continue
        if any(P.subset_of(Q, t) for Q in outers):
            continue
        if not _covered(P, outers, t):
            return False
    return True


def set_equal(U1: PCollection, U2: PCollection, tol_incl: float = None) -> bool:
    return contains_set(U1, U2, tol_incl) and contains_set(U2, U1, tol_incl)


def as_collection(S) -> PCollection:
    return S if isinstance(S, PCollection) else PCollection(S.dim, [S])


# ---------------------------------------------------------------------------
# Box and the robust predecessor


@dataclass(frozen=True)
class Box:
    """``center + radius * B^n`` in the infinity norm."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("box radius must be nonnegative")

    def to_polytope(self) -> Polytope:
        return Polytope.box(self.center, self.radius)


def ball(dim: int, radius: float) -> Polytope:
    return Polytope.box(np.zeros(dim), radius)


def pre(Xp: PCollection, A, B, U: Polytope, W: Polytope, *, neg_BU: Polytope = None) -> PCollection:
    """Robust one-step predecessor, member by member.

    Each member ``P`` maps to ``{x | A x in (P - W) + (-B U)}``, i.e. the
    states with some ``u in U`` such that ``A x + B u + W subset P``.
    Exact per member; an under-approximation of the predecessor of the
    union when members overlap and W is full-dimensional.
    """
    Xp = as_collection(Xp)
    A = np.atleast_2d(np.asarray(A, float))
    negBU = linear_image(-np.atleast_2d(np.asarray(B, float)), U) if neg_BU is None else neg_BU
    out = []
    for P in Xp.members:
        S = pontryagin_diff(P, W)
        if S.is_empty():
            continue
        S = minkowski_sum(reduce(S), negBU)
        R = linear_preimage(A, S)
        if R.is_empty():
            continue
        out.append(reduce(R))
    return PCollection(Xp.dim, out)
