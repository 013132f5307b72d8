"""Fixed-point computation of hybrid controlled invariant (HCI) sets.

Three schemes share one iteration ``I_{i+1} = I_0 & P(I_i)``:

* ``maximal_hci``: nominal predecessor, stops on ``I_i == I_{i+1}`` (may never
  stop; capped).
* ``synth_contraction``: state set shrunk by ``eps_x``, input set by ``eps_u``;
  stops on ``I_i subset (I_{i+n'})_gamma`` and pads the last iterates with
  null-controllable sets.
* ``synth_expansion``: disturbance grown by ``eps``; stops on
  ``I_i subset (I_{i+1})_eps`` and returns ``I_{i+1}``.
"""
from __future__ import annotations

import itertools
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import geometry as geo
from .geometry import IndeterminateInclusionError, PCollection, Polytope
from .product import (NOMINAL, HybridSet, PreVariant, ProductSystem, contract,
                      hybrid_contains, hybrid_intersect, hybrid_minkowski, p_operator,
                      robust_input)
from .tolerances import TOL_LP

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 200


class UncontrollableError(ValueError):
    def __init__(self, rank, n):
        super().__init__(f"(A, B) is not controllable: rank {rank} < {n}")
        self.rank = rank
        self.n = n


class MonotonicityError(AssertionError):
    """An iterate was not contained in its predecessor."""


# ---------------------------------------------------------------------------
# reports


@dataclass
class IterationStats:
    index: int
    slices: Dict[tuple, Tuple[int, int]]  # key -> (num, larg)

    @property
    def max_num(self) -> int:
        return max((v[0] for v in self.slices.values()), default=0)

    @property
    def max_larg(self) -> int:
        return max((v[1] for v in self.slices.values()), default=0)


@dataclass
class SynthesisReport:
    scheme: str
    result: HybridSet
    iterations: int
    terminated: str  # fixed_point | stop_criterion | empty | iteration_cap
    stats: List[IterationStats] = field(default_factory=list)
    certified: bool = False
    parameters: dict = field(default_factory=dict)
    elapsed: float = 0.0
    diagnostic: str = ""

    @property
    def numh(self) -> int:
        return self.result.numh_total

    def to_dict(self, timing: bool = True) -> dict:
        from .fileio import hybrid_to_dict
        out = {
            "scheme": self.scheme,
            "parameters": self.parameters,
            "iterations": self.iterations,
            "terminated": self.terminated,
            "certified": self.certified,
            "numh": self.numh,
            "elapsed_s": self.elapsed,
            "diagnostic": self.diagnostic,
            "per_iteration": [
                {"iteration": s.index,
                 "slices": [{"q": k[0], "qp": k[1], "num": v[0], "larg": v[1]}
                            for k, v in s.slices.items()]}
                for s in self.stats],
            "result": hybrid_to_dict(self.result),
        }
        if not timing:
            del out["elapsed_s"]
        return out


def _check_monotone(new: HybridSet, old: HybridSet, index: int) -> None:
    try:
        ok = hybrid_contains(new, old)
    except IndeterminateInclusionError:
        logger.warning("monotonicity check indeterminate at iteration %d", index)
        return
    if not ok:
        raise MonotonicityError(f"I_{index} is not contained in I_{index - 1}")


def _iterate(prod: ProductSystem, I0: HybridSet, I: HybridSet, variant: PreVariant) -> HybridSet:
    P = p_operator(prod, I, variant, keys=I0.keys())
    return hybrid_intersect(I0, P).normalized()


def _safe_contains(inner, outer) -> bool:
    try:
        return hybrid_contains(inner, outer)
    except IndeterminateInclusionError:
        return False


# ---------------------------------------------------------------------------
# maximal HCI


def maximal_hci(prod: ProductSystem, max_iter: int = DEFAULT_MAX_ITER, *,
                I0: HybridSet = None, check_monotone: bool = True,
                certify: bool = True) -> SynthesisReport:
    """Iterate the nominal predecessor from the safe set until a fixed point."""
    t0 = time.perf_counter()
    I0 = prod.i0().normalized() if I0 is None else I0
    I = I0
    stats = [IterationStats(0, I0.stats())]
    terminated, diagnostic = "iteration_cap", ""
    i = 0
    for i in range(1, max_iter + 1):
        nxt = _iterate(prod, I0, I, NOMINAL)
        stats.append(IterationStats(i, nxt.stats()))
        logger.info("maximal iteration %d: %s", i, nxt.stats())
        if nxt.is_empty():
            I, terminated = nxt, "empty"
            break
        if check_monotone:
            _check_monotone(nxt, I, i)
        try:
            fixed = hybrid_contains(I, nxt)
        except IndeterminateInclusionError:
            fixed, diagnostic = False, f"inclusion indeterminate at iteration {i}"
        I = nxt
        if fixed:
            terminated = "fixed_point"
            break
    report = SynthesisReport("maximal", I, i, terminated, stats,
                             parameters={"max_iter": max_iter}, diagnostic=diagnostic)
    if certify and terminated == "fixed_point":
        report.certified = certify_hci(prod, I).certified
    report.elapsed = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# contraction constants and null-controllable sets


@dataclass(frozen=True)
class ContractionConstants:
    c_x: float
    c_u: float
    n_prime: int
    method: str

    def eps(self, gamma: float) -> Tuple[float, float]:
        return self.c_x * gamma, self.c_u * gamma


def _controllability(A, B, steps):
    blocks, Ak = [], np.eye(A.shape[0])
    for _ in range(steps):
        blocks.append(Ak @ B)
        Ak = A @ Ak
    return np.hstack(blocks)


def _inf_norm(M) -> float:
    M = np.atleast_2d(M)
    return float(np.abs(M).sum(axis=1).max()) if M.size else 0.0


def contraction_constants(A, B, method: str = "lp_vertex", n_prime: Optional[int] = None,
                          floor: float = 1e-6) -> ContractionConstants:
    """Constants ``c_x, c_u, n'`` with ``gamma B^n subset N_{n'}(c_x gamma, c_u gamma)``.

    ``closed_form`` uses ``c_u = |C'^{-1} A^n|`` for ``n`` independent columns
    ``C'`` of the controllability matrix; ``lp_vertex`` minimizes ``c_x + c_u``
    over steering sequences for all vertices of the unit box.
    """
    A = np.atleast_2d(np.asarray(A, float))
    B = np.asarray(B, float)
    if B.ndim == 1:
        B = B[:, None]
    n, m = A.shape[0], B.shape[1]
    C = _controllability(A, B, n)
    rank = int(np.linalg.matrix_rank(C))
    if rank < n:
        raise UncontrollableError(rank, n)
    if method == "closed_form":
        cols = []
        for j in range(C.shape[1]):
            if np.linalg.matrix_rank(C[:, cols + [j]]) > len(cols):
                cols.append(j)
            if len(cols) == n:
                break
        Cp = C[:, cols]
        c_u = _inf_norm(np.linalg.solve(Cp, np.linalg.matrix_power(A, n)))
        c_u = max(c_u, floor)
        c_x = 0.0
        for k in range(n + 1):
            drive = sum((np.linalg.matrix_power(A, k - t - 1) @ B for t in range(k)),
                        np.zeros((n, m)))
            c_x = max(c_x, _inf_norm(np.linalg.matrix_power(A, k)) + _inf_norm(drive) * c_u)
        return ContractionConstants(c_x, c_u, n, "closed_form")
    if method != "lp_vertex":
        raise ValueError(f"unknown method {method!r}")
    candidates = [n_prime] if n_prime is not None else range(1, n + 1)
    for k in candidates:
        sol = _lp_vertex(A, B, k)
        if sol is not None:
            c_x, c_u = sol
            return ContractionConstants(max(c_x, 1.0), max(c_u, floor), k, "lp_vertex")
    raise ValueError(f"no steering sequence of length {n_prime} reaches the origin")


def _vertex_steering_rows(A, B, k, z):
    """Affine maps ``u -> x_d`` for ``d = 0..k`` along ``x_{d+1} = A x_d + B u_d``."""
    n, m = B.shape
    rows = []
    Mx = np.zeros((n, k * m))
    x0 = z.copy()
    rows.append((Mx.copy(), x0.copy()))
    for d in range(k):
        Mx = A @ Mx
        Mx[:, d * m:(d + 1) * m] += B
        x0 = A @ x0
        rows.append((Mx.copy(), x0.copy()))
    return rows


def _lp_vertex(A, B, k):
    n, m = B.shape
    verts = [np.array(v, float) for v in itertools.product((-1.0, 1.0), repeat=n)]
    nu = k * m
    nvar = len(verts) * nu + 2  # ..., c_x, c_u
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for vi, z in enumerate(verts):
        off = vi * nu
        traj = _vertex_steering_rows(A, B, k, z)
        Mk, xk = traj[k]
        for r in range(n):
            row = np.zeros(nvar)
            row[off:off + nu] = Mk[r]
            A_eq.append(row)
            b_eq.append(-xk[r])
        for j in range(nu):
            for s in (1.0, -1.0):
                row = np.zeros(nvar)
                row[off + j] = s
                row[-1] = -1.0
                A_ub.append(row)
                b_ub.append(0.0)
        for d in range(1, k):
            Md, xd = traj[d]
            for r in range(n):
                for s in (1.0, -1.0):
                    row = np.zeros(nvar)
                    row[off:off + nu] = s * Md[r]
                    row[-2] = -1.0
                    A_ub.append(row)
                    b_ub.append(-s * xd[r])
    c = np.zeros(nvar)
    c[-2:] = 1.0
    bounds = [(None, None)] * (nvar - 2) + [(1.0, None), (0.0, None)]
    out = geo.solve_lp(geo.LpProblem(np.array(A_ub), np.array(b_ub), c,
                                     np.array(A_eq), np.array(b_eq), bounds))
    if not out.feasible:
        return None
    return float(out.point[-2]), float(out.point[-1])


def replay_constraints(A, B, c_x: float, c_u: float, n_prime: int, slack: float = TOL_LP) -> List[bool]:
    """For each vertex of the unit box: does a steering sequence exist that
    reaches the origin in ``n_prime`` steps with ``|u_j| <= c_u`` and
    ``|x_d| <= c_x``?"""
    A = np.atleast_2d(np.asarray(A, float))
    B = np.asarray(B, float)
    if B.ndim == 1:
        B = B[:, None]
    n, m = B.shape
    nu = n_prime * m
    verdicts = []
    for v in itertools.product((-1.0, 1.0), repeat=n):
        z = np.array(v)
        traj = _vertex_steering_rows(A, B, n_prime, z)
        Mk, xk = traj[n_prime]
        G, h = [np.eye(nu), -np.eye(nu)], [np.full(nu, c_u + slack)] * 2
        for d in range(1, n_prime):
            Md, xd = traj[d]
            G += [Md, -Md]
            h += [c_x + slack - xd, c_x + slack + xd]
        out = geo.solve_lp(geo.LpProblem(np.vstack(G), np.concatenate(h), None, Mk, -xk))
        verdicts.append(out.feasible)
    return verdicts


@dataclass(frozen=True)
class NullControllableSequence:
    sets: Tuple[Polytope, ...]
    eps_x: float
    eps_u: float

    def __getitem__(self, i) -> Polytope:
        return self.sets[i]

    def __len__(self):
        return len(self.sets)


def null_controllable_seq(A, B, eps_x: float, eps_u: float, n_prime: int) -> NullControllableSequence:
    """``N_0 = {0}``, ``N_{i+1} = {x | exists u in eps_u B^m: A x + B u in N_i} & eps_x B^n``."""
    if eps_x <= 0 or eps_u <= 0:
        raise ValueError("eps_x and eps_u must be positive")
    A = np.atleast_2d(np.asarray(A, float))
    B = np.asarray(B, float)
    if B.ndim == 1:
        B = B[:, None]
    n, m = B.shape
    neg_BU = geo.linear_image(-B, geo.ball(m, eps_u))
    box = geo.ball(n, eps_x)
    sets = [Polytope.point(np.zeros(n))]
    for _ in range(n_prime):
        S = geo.linear_preimage(A, geo.minkowski_sum(sets[-1], neg_BU)) & box
        sets.append(geo.reduce(S))
    return NullControllableSequence(tuple(sets), eps_x, eps_u)


# ---------------------------------------------------------------------------
# approximation schemes


def synth_contraction(prod: ProductSystem, gamma: float, consts: ContractionConstants,
                      max_iter: int = DEFAULT_MAX_ITER, *, check_monotone: bool = True,
                      certify: bool = True) -> SynthesisReport:
    """(eps_x, eps_u)-contraction scheme; the result is padded by null-controllable sets."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    t0 = time.perf_counter()
    eps_x, eps_u = consts.eps(gamma)
    k = consts.n_prime
    params = {"gamma": gamma, "c_x": consts.c_x, "c_u": consts.c_u, "eps_x": eps_x,
              "eps_u": eps_u, "n_prime": k, "method": consts.method, "max_iter": max_iter}
    variant = PreVariant("contraction", eps_u)
    U_eff, _ = prod.input_and_disturbance(variant)
    I0 = contract(prod.i0(), eps_x).normalized()

    def done(result, iterations, terminated, stats, diag=""):
        rep = SynthesisReport("contraction", result, iterations, terminated, stats,
                              parameters=params, diagnostic=diag)
        if certify and not result.is_empty():
            rep.certified = certify_hci(prod, result).certified
        rep.elapsed = time.perf_counter() - t0
        return rep

    stats = [IterationStats(0, I0.stats())]
    if I0.is_empty() or U_eff.is_empty():
        return done(HybridSet(prod.n), 0, "empty", stats,
                    "contracted state or input set is empty")
    seq = null_controllable_seq(prod.sys.A, prod.sys.B, eps_x, eps_u, k)
    window = deque([I0], maxlen=k + 1)
    for i in range(1, max_iter + 1):
        nxt = _iterate(prod, I0, window[-1], variant)
        stats.append(IterationStats(i, nxt.stats()))
        logger.info("contraction iteration %d: %s", i, nxt.stats())
        if nxt.is_empty():
            return done(nxt, i, "empty", stats)
        if check_monotone:
            _check_monotone(nxt, window[-1], i)
        window.append(nxt)
        if len(window) == k + 1:
            # window = I_{i-k}, ..., I_i; test I_{i-k} subset (I_i)_gamma
            head = window[0]
            if _safe_contains(head, hybrid_minkowski(window[-1], geo.ball(prod.n, gamma))):
                fixed = _safe_contains(head, window[1])
                padded = HybridSet(prod.n)
                for j in range(1, k + 1):
                    padded = padded.union(hybrid_minkowski(window[j], seq[j]))
                result = padded.normalized()
                return done(result, i, "fixed_point" if fixed else "stop_criterion", stats)
    return done(window[-1], max_iter, "iteration_cap", stats)


def synth_expansion(prod: ProductSystem, eps: float, max_iter: int = DEFAULT_MAX_ITER, *,
                    check_monotone: bool = True, certify: bool = True) -> SynthesisReport:
    """eps-expansion scheme: inflated disturbance, result ``I_{i*+1}``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    t0 = time.perf_counter()
    variant = PreVariant("expansion", eps)
    I0 = prod.i0().normalized()
    prev = I0
    stats = [IterationStats(0, I0.stats())]
    grow = geo.ball(prod.n, eps)
    terminated, result, i = "iteration_cap", I0, 0
    for i in range(1, max_iter + 1):
        nxt = _iterate(prod, I0, prev, variant)
        stats.append(IterationStats(i, nxt.stats()))
        logger.info("expansion iteration %d: %s", i, nxt.stats())
        if nxt.is_empty():
            terminated, result = "empty", nxt
            break
        if check_monotone:
            _check_monotone(nxt, prev, i)
        if _safe_contains(prev, hybrid_minkowski(nxt, grow)):
            terminated = "fixed_point" if _safe_contains(prev, nxt) else "stop_criterion"
            result = nxt
            break
        prev = result = nxt
    rep = SynthesisReport("expansion", result, i, terminated, stats,
                          parameters={"eps": eps, "max_iter": max_iter})
    if certify and terminated in ("fixed_point", "stop_criterion"):
        rep.certified = certify_hci(prod, result).certified
    rep.elapsed = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# certification


@dataclass
class Certificate:
    certified: bool
    key: Optional[tuple] = None
    point: Optional[np.ndarray] = None
    reason: str = ""

    def __bool__(self):
        return self.certified


def certify_hci(prod: ProductSystem, H: HybridSet) -> Certificate:
    """Exact check of ``H subset I_0`` and ``H subset P(H)`` slice by slice.

    On failure, returns the offending slice and a point of it from which no
    input keeps every disturbed successor inside a single member of ``H``.
    """
    if H.is_empty():
        return Certificate(True)
    I0 = prod.i0()
    for k, S in H.items():
        if k not in I0:
            return Certificate(False, k, None, "slice outside the safe product states")
        try:
            if not geo.contains_set(S, I0[k]):
                return Certificate(False, k, _uncovered_point(S, I0[k]), "slice leaves I_0")
        except IndeterminateInclusionError:
            return Certificate(False, k, None, "inclusion in I_0 indeterminate")
    P = p_operator(prod, H, NOMINAL, keys=H.keys())
    for k, S in H.items():
        try:
            ok = geo.contains_set(S, P[k])
        except IndeterminateInclusionError:
            return Certificate(False, k, None, "inclusion in P(H) indeterminate")
        if not ok:
            return Certificate(False, k, _uncovered_point(S, P[k]), "no robust input")
    return Certificate(True)


def _uncovered_point(S: PCollection, outer: PCollection):
    for P in S.members:
        x = geo.uncovered_point(P, list(outer.members))
        if x is not None:
            return x
    return None


def has_robust_input(prod: ProductSystem, H: HybridSet, key, x) -> bool:
    """Per-point oracle: some member of some successor slice admits a robust input."""
    for succ in prod.successor_keys(key[1]):
        for M in H[succ].members:
            if robust_input(prod, x, M, min_norm=False, slack=TOL_LP) is not None:
                return True
    return False
