"""Product of a linear system with a Rabin automaton, and hybrid sets over
its state set.

A hybrid state is a triple ``(q, q', x)``: the automaton moved from ``q`` to
``q'`` while reading the label of ``x``.  A :class:`HybridSet` stores one
P-collection per pair ``(q, q')``; absent keys are empty slices.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, Iterator, Mapping, Optional, Tuple

import numpy as np

from . import geometry as geo
from .automata import (Labeling, RabinAutomaton, State, check_assumptions, out_states,
                       transition_region)
from .geometry import PCollection, Polytope
from .system import LinearSystem

logger = logging.getLogger(__name__)

Key = Tuple[State, State]


class SynthesisImpossibleError(ValueError):
    """The safe part of the product state set is empty."""


class ContractionError(ValueError):
    """A contraction emptied a set it must keep nonempty."""


class HybridSet:
    """Sparse map ``(q, q') -> PCollection``; empty slices are never stored."""

    __slots__ = ("dim", "slices")

    def __init__(self, dim: int, slices: Mapping[Key, PCollection] = ()):
        self.dim = dim
        self.slices: Dict[Key, PCollection] = {}
        for key, S in dict(slices).items():
            S = geo.as_collection(S)
            if S.dim != dim:
                raise geo.DimensionMismatchError(f"slice {key} has dim {S.dim}, expected {dim}")
            if S.num and not S.is_empty():
                self.slices[key] = PCollection(dim, [P for P in S.members if not P.is_empty()])

    def __getitem__(self, key: Key) -> PCollection:
        """Projection onto the pair ``key``; empty collection when absent."""
        return self.slices.get(key, PCollection(self.dim))

    def __contains__(self, key) -> bool:
        return key in self.slices

    def __iter__(self) -> Iterator[Key]:
        return iter(self.slices)

    def __len__(self):
        return len(self.slices)

    def keys(self):
        return self.slices.keys()

    def items(self):
        return self.slices.items()

    def is_empty(self) -> bool:
        return not self.slices

    def __repr__(self):
        body = ", ".join(f"{k}: num={v.num}" for k, v in self.slices.items())
        return f"HybridSet({body})"

    def map(self, fn) -> "HybridSet":
        return HybridSet(self.dim, {k: fn(v) for k, v in self.slices.items()})

    def normalized(self, merge: bool = True) -> "HybridSet":
        return self.map(lambda S: S.normalized(merge))

    def contains_state(self, q, qp, x, tol_geom: float = None) -> bool:
        return self[(q, qp)].contains(x, tol_geom)

    @property
    def numh_total(self) -> int:
        """Total number of halfspaces over all members of all slices."""
        return sum(P.numh for S in self.slices.values() for P in S.members)

    def stats(self) -> Dict[Key, Tuple[int, int]]:
        return {k: (S.num, S.larg) for k, S in self.slices.items()}

    def union(self, other: "HybridSet") -> "HybridSet":
        keys = list(self.slices) + [k for k in other.slices if k not in self.slices]
        return HybridSet(self.dim, {k: self[k].union(other[k]) for k in keys})


def hybrid_intersect(H1: HybridSet, H2: HybridSet) -> HybridSet:
    return HybridSet(H1.dim, {k: geo.intersect(H1[k], H2[k]) for k in H1.slices if k in H2.slices})


def hybrid_contains(inner: HybridSet, outer: HybridSet, tol_incl: float = None) -> bool:
    """Slice-wise inclusion ``inner subset outer``."""
    for k, S in inner.items():
        if k not in outer:
            return False
        if not geo.contains_set(S, outer[k], tol_incl):
            return False
    return True


def hybrid_equal(H1: HybridSet, H2: HybridSet, tol_incl: float = None) -> bool:
    return hybrid_contains(H1, H2, tol_incl) and hybrid_contains(H2, H1, tol_incl)


def hybrid_minkowski(H: HybridSet, S: Polytope) -> HybridSet:
    """Per-slice Minkowski sum with ``S``, keys preserved."""
    if not S.is_bounded():
        raise geo.UnsupportedOperandError("hybrid Minkowski sum needs a bounded summand")
    return H.map(lambda C: C.map(lambda P: geo.minkowski_sum(P, S)))


def expand(H: HybridSet, eps: float) -> HybridSet:
    if eps < 0:
        raise ValueError("expansion radius must be nonnegative")
    if eps == 0:
        return H
    return hybrid_minkowski(H, geo.ball(H.dim, eps))


def contract(H: HybridSet, eps: float) -> HybridSet:
    """Per-member Pontryagin difference with ``eps * B^n``; emptied slices dropped."""
    if eps < 0:
        raise ValueError("contraction radius must be nonnegative")
    if eps == 0:
        return H
    B = geo.ball(H.dim, eps)
    return H.map(lambda C: C.map(lambda P: geo.pontryagin_diff(P, B)))


def hausdorff(H1: HybridSet, H2: HybridSet, tol_eps: float = 1e-6,
              tol_incl: float = None) -> float:
    """Smallest ``eps`` with mutual inclusion in the eps-expansions
    (infinity norm), by bisection; ``inf`` when the key sets differ."""
    if set(H1.keys()) != set(H2.keys()):
        return math.inf

    def within(eps):
        return (hybrid_contains(H1, expand(H2, eps), tol_incl)
                and hybrid_contains(H2, expand(H1, eps), tol_incl))

    if within(0.0):
        return 0.0
    hi = 1.0
    while not within(hi):
        hi *= 2.0
        if hi > 1e9:
            return math.inf
    lo = 0.0
    while hi - lo > tol_eps:
        mid = 0.5 * (lo + hi)
        if within(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# product system


@dataclass(frozen=True)
class PreVariant:
    """Flavor of the predecessor: ``nominal``, ``contraction`` (input set
    shrunk by ``eps``) or ``expansion`` (disturbance set grown by ``eps``)."""

    kind: str = "nominal"
    eps: float = 0.0

    def __post_init__(self):
        if self.kind not in ("nominal", "contraction", "expansion"):
            raise ValueError(f"unknown predecessor variant {self.kind!r}")
        if self.eps < 0:
            raise ValueError("variant radius must be nonnegative")


NOMINAL = PreVariant()


@dataclass
class ProductSystem:
    sys: LinearSystem
    aut: RabinAutomaton
    lab: Labeling
    regions: Dict[Key, Optional[PCollection]]
    initial: HybridSet
    assumptions: object = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.sys.n

    @property
    def pairs(self):
        return list(self.regions)

    @property
    def E(self):
        return self.aut.E

    def i0(self) -> HybridSet:
        """The safe product states: slices with ``q'`` outside E and a bounded region."""
        if "i0" not in self._cache:
            self._cache["i0"] = HybridSet(self.n, {
                k: R for k, R in self.regions.items()
                if k[1] not in self.aut.E and R is not None})
        return self._cache["i0"]

    def unsafe_keys(self):
        return [k for k in self.regions if k[1] in self.aut.E]

    def input_and_disturbance(self, variant: PreVariant = NOMINAL):
        U, W = self.sys.U, self.sys.W
        if variant.kind == "contraction" and variant.eps > 0:
            U = geo.pontryagin_diff(U, geo.ball(self.sys.m, variant.eps))
        elif variant.kind == "expansion" and variant.eps > 0:
            W = geo.minkowski_sum(W, geo.ball(self.n, variant.eps))
        return U, W

    def neg_BU(self, U: Polytope) -> Polytope:
        return geo.linear_image(-self.sys.B, U)

    def successor_keys(self, qp: State):
        """Pairs ``(q', q'')`` reachable after ``q'``."""
        return [(qp, q2) for q2 in out_states(self.aut, qp)]


def build_product(sys: LinearSystem, aut: RabinAutomaton, lab: Labeling, *,
                  check: bool = True, merge: bool = True) -> ProductSystem:
    """Enumerate pairs ``(q, q')`` with a transition and a nonempty labeled region.

    Regions whose union is convex are fused (``merge``) so that later
    contractions act on the union rather than on its pieces.
    """
    report = check_assumptions(aut, lab, sys) if check else None
    if report is not None and not report.passed:
        logger.warning("assumption check failed: %s",
                       [c.name for c in report.checks if not c.passed])
    regions: Dict[Key, Optional[PCollection]] = {}
    for q in aut.states:
        for q2 in out_states(aut, q):
            R = transition_region(aut, lab, q, q2)
            if R is None:
                regions[(q, q2)] = None
            elif R.num and not R.is_empty():
                regions[(q, q2)] = R.normalized(merge)
    initial = {}
    if sys.X0 is not None:
        for s in aut.alphabet:
            q2 = aut.delta[aut.initial, s]
            R = lab.region(s) if s != lab.outside else None
            if R is None:
                continue
            cut = geo.intersect(sys.X0, R)
            if cut.num:
                key = (aut.initial, q2)
                initial[key] = initial[key].union(cut) if key in initial else cut
    prod = ProductSystem(sys, aut, lab, regions, HybridSet(sys.n, initial), report)
    if prod.i0().is_empty():
        raise SynthesisImpossibleError("no bounded product region avoids E")
    return prod


def p_operator(prod: ProductSystem, H: HybridSet, variant: PreVariant = NOMINAL,
               keys: Iterable[Key] = None) -> HybridSet:
    """Predecessor of a hybrid set.

    Slice ``(q, q')`` is the union over ``q''`` of ``pre(H(q', q''))``;
    only keys of ``keys`` (default: the safe support) are produced.
    """
    U, W = prod.input_and_disturbance(variant)
    if U.is_empty():
        return HybridSet(prod.n)
    negBU = prod.neg_BU(U)
    pre_cache: Dict[Key, PCollection] = {}

    def pre_of(key):
        if key not in pre_cache:
            pre_cache[key] = geo.pre(H[key], prod.sys.A, prod.sys.B, U, W, neg_BU=negBU)
        return pre_cache[key]

    keys = list(prod.i0().keys()) if keys is None else list(keys)
    out = {}
    for (q, qp) in keys:
        members = []
        for succ in prod.successor_keys(qp):
            if succ in H:
                members.extend(pre_of(succ).members)
        if members:
            out[(q, qp)] = PCollection(prod.n, members)
    return HybridSet(prod.n, out)


def rho_contract(prod: ProductSystem, rho: float) -> ProductSystem:
    """Product with regions, initial set and input set contracted by ``rho``."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if rho == 0:
        return prod
    ball_n = geo.ball(prod.n, rho)
    U = geo.pontryagin_diff(prod.sys.U, geo.ball(prod.sys.m, rho))
    if U.is_empty():
        raise ContractionError(f"input set emptied by rho={rho}")
    regions = {}
    for k, R in prod.regions.items():
        if R is None:
            regions[k] = None
            continue
        C = R.map(lambda P: geo.pontryagin_diff(P, ball_n))
        if C.num:
            regions[k] = C.normalized()
    X0 = prod.initial.map(lambda C: C.map(lambda P: geo.pontryagin_diff(P, ball_n)))
    if not any(R is not None for k, R in regions.items() if k[1] not in prod.E):
        raise ContractionError(f"safe state set emptied by rho={rho}")
    if prod.sys.X0 is not None and X0.is_empty():
        raise ContractionError(f"initial set emptied by rho={rho}")
    sys = prod.sys.with_sets(U=U)
    return ProductSystem(sys, prod.aut, prod.lab, regions, X0, prod.assumptions)


def robust_input(prod: ProductSystem, x, target: Polytope, *, U: Polytope = None,
                 W: Polytope = None, min_norm: bool = True, slack: float = 0.0):
    """An input ``u in U`` with ``A x + B u + W subset target``, or ``None``."""
    A, B = prod.sys.A, prod.sys.B
    U = prod.sys.U if U is None else U
    W = prod.sys.W if W is None else W
    T = geo.pontryagin_diff(target, W)
    x = np.asarray(x, float)
    m = B.shape[1]
    G = np.vstack([U.A, T.A @ B])
    h = np.concatenate([U.b, T.b - T.A @ (A @ x)]) + slack
    if min_norm:
        # variables (u, s): minimize s with -s <= u_j <= s
        G = np.vstack([
            np.hstack([G, np.zeros((G.shape[0], 1))]),
            np.hstack([np.eye(m), -np.ones((m, 1))]),
            np.hstack([-np.eye(m), -np.ones((m, 1))]),
        ])
        h = np.concatenate([h, np.zeros(2 * m)])
        c = np.zeros(m + 1)
        c[-1] = 1.0
        out = geo._lp(c, G, h)
        return out.point[:m] if out.feasible else None
    out = geo._lp(None, G, h)
    return out.point[:m] if out.feasible else None
