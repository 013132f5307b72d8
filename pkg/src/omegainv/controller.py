"""Online controller driven by an HCI set, closed-loop simulation and the
safety monitor that replays a trace through the automaton."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import geometry as geo
from .automata import run, step
from .geometry import Polytope
from .product import HybridSet, ProductSystem, robust_input
from .tolerances import TOL_GEOM


class ControllerInfeasibilityError(RuntimeError):
    def __init__(self, msg, step_index=None, state=None):
        super().__init__(msg if step_index is None else f"step {step_index}: {msg}")
        self.step_index = step_index
        self.state = state


class NotInInvariantError(ValueError):
    pass


@dataclass(frozen=True)
class HybridState:
    q: object
    qp: object
    x: np.ndarray

    @property
    def key(self):
        return (self.q, self.qp)


class HciController:
    """Stationary feedback ``u = mu(q, q', x)`` keeping the state inside ``inv``.

    Candidates are the members of the successor slices ``inv(q', q'')`` that
    lie inside the labeled region of ``(q', q'')``; the first member admitting
    a robust input wins.
    """

    def __init__(self, prod: ProductSystem, inv: HybridSet, tie_break: str = "min_input_norm"):
        if tie_break not in ("min_input_norm", "first_feasible"):
            raise ValueError(f"unknown tie_break {tie_break!r}")
        self.prod = prod
        self.inv = inv
        self.tie_break = tie_break
        self._candidates = {}

    def candidates(self, qp) -> List[Tuple[tuple, Polytope]]:
        if qp not in self._candidates:
            out = []
            for succ in self.prod.successor_keys(qp):
                region = self.prod.regions.get(succ)
                if region is None or succ[1] in self.prod.E:
                    continue
                for M in self.inv[succ].members:
                    if geo.contains_set(geo.as_collection(M), region):
                        out.append((succ, M))
            self._candidates[qp] = out
        return self._candidates[qp]

    def choose_input(self, hs: HybridState) -> np.ndarray:
        x = np.asarray(hs.x, float)
        if not self.inv.contains_state(hs.q, hs.qp, x):
            raise NotInInvariantError(f"state {hs} is outside the invariant set")
        min_norm = self.tie_break == "min_input_norm"
        for _, M in self.candidates(hs.qp):
            u = robust_input(self.prod, x, M, min_norm=min_norm)
            if u is not None:
                return u
        raise ControllerInfeasibilityError(f"no candidate admits a robust input at {hs}", state=hs)

    __call__ = choose_input


def initial_state(prod: ProductSystem, x0) -> HybridState:
    q0 = prod.aut.initial
    x0 = np.asarray(x0, float)
    return HybridState(q0, step(prod.aut, q0, prod.lab.label(x0)), x0)


# ---------------------------------------------------------------------------
# traces


@dataclass
class Trace:
    states: List[HybridState]
    inputs: List[np.ndarray] = field(default_factory=list)
    disturbances: List[np.ndarray] = field(default_factory=list)
    in_inv: List[bool] = field(default_factory=list)
    seed: Optional[int] = None

    def __len__(self):
        return len(self.states)

    @property
    def xs(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    def header(self, n: int, m: int) -> List[str]:
        return (["k", "q", "qp"] + [f"x_{i + 1}" for i in range(n)]
                + [f"u_{j + 1}" for j in range(m)] + [f"w_{i + 1}" for i in range(n)])

    def rows(self, n: int, m: int):
        for k, s in enumerate(self.states):
            u = list(self.inputs[k]) if k < len(self.inputs) else [None] * m
            w = list(self.disturbances[k]) if k < len(self.disturbances) else [None] * n
            yield [k, s.q, s.qp] + [float(v) for v in s.x] + u + w

    def to_csv(self, path) -> None:
        from .fileio import write_csv
        n = len(self.states[0].x)
        m = len(self.inputs[0]) if self.inputs else 0
        write_csv(path, self.header(n, m), self.rows(n, m))


def trace_from_csv(path) -> Trace:
    from .fileio import read_csv
    header, rows = read_csv(path)
    xi = [i for i, h in enumerate(header) if h.startswith("x_")]
    ui = [i for i, h in enumerate(header) if h.startswith("u_")]
    wi = [i for i, h in enumerate(header) if h.startswith("w_")]
    states, us, ws = [], [], []
    for r in rows:
        states.append(HybridState(r[1], r[2], np.array([float(r[i]) for i in xi])))
        if ui and r[ui[0]] != "":
            us.append(np.array([float(r[i]) for i in ui]))
        if wi and r[wi[0]] != "":
            ws.append(np.array([float(r[i]) for i in wi]))
    return Trace(states, us, ws)


def sample_polytope(P: Polytope, rng: np.random.Generator, max_tries: int = 100000) -> np.ndarray:
    """Uniform sample; direct for axis-aligned boxes, rejection otherwise."""
    V = P.vertices()
    if len(V) == 0:
        raise ValueError("cannot sample an empty polytope")
    lo, hi = V.min(axis=0), V.max(axis=0)
    if np.all(hi - lo <= TOL_GEOM):
        return lo.copy()
    if _is_box(P, lo, hi):
        return rng.uniform(lo, hi)
    for _ in range(max_tries):
        x = rng.uniform(lo, hi)
        if P.contains(x, 0.0):
            return x
    raise RuntimeError("rejection sampling failed; polytope too thin")


def _is_box(P: Polytope, lo, hi) -> bool:
    return bool(geo.Polytope.from_bounds(lo, hi).subset_of(P))


def sample_collection(C, rng: np.random.Generator) -> np.ndarray:
    """Sample a member proportionally to its bounding-box volume, then a point."""
    members = list(C.members)
    vols = []
    for M in members:
        V = M.vertices()
        vols.append(float(np.prod(V.max(axis=0) - V.min(axis=0))) if len(V) else 0.0)
    vols = np.array(vols)
    p = vols / vols.sum() if vols.sum() > 0 else np.full(len(members), 1.0 / len(members))
    return sample_polytope(members[rng.choice(len(members), p=p)], rng)


def simulate(ctrl: HciController, x0, steps: int, seed: int = 0, *, strict: bool = True) -> Trace:
    """Closed loop with uniformly drawn disturbances; deterministic in ``seed``."""
    prod = ctrl.prod
    rng = np.random.default_rng(seed)
    hs = initial_state(prod, x0)
    trace = Trace([hs], seed=seed)
    trace.in_inv.append(ctrl.inv.contains_state(hs.q, hs.qp, hs.x))
    if not trace.in_inv[0]:
        raise NotInInvariantError(f"initial state {hs} is outside the invariant set")
    for k in range(steps):
        try:
            u = ctrl.choose_input(hs)
        except ControllerInfeasibilityError as exc:
            raise ControllerInfeasibilityError(str(exc), k, hs) from None
        w = sample_polytope(prod.sys.W, rng)
        x = prod.sys.A @ hs.x + prod.sys.B @ u + w
        nxt = HybridState(hs.qp, step(prod.aut, hs.qp, prod.lab.label(x)), x)
        ok = ctrl.inv.contains_state(nxt.q, nxt.qp, x)
        trace.inputs.append(u)
        trace.disturbances.append(w)
        trace.states.append(nxt)
        trace.in_inv.append(ok)
        if strict and not ok:
            raise ControllerInfeasibilityError("successor left the invariant set", k, nxt)
        hs = nxt
    return trace


# ---------------------------------------------------------------------------
# monitor


@dataclass(frozen=True)
class Verdict:
    ok: bool
    index: Optional[int] = None
    run: Tuple = ()

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "OK" if self.ok else f"Violation({self.index})"


def monitor(trace: Trace, prod: ProductSystem) -> Verdict:
    """Replay the label word; fail at the first visited state in E."""
    word = [prod.lab.label(s.x) for s in trace.states]
    states = run(prod.aut, word)
    for k, q in enumerate(states[1:]):
        if q in prod.E:
            return Verdict(False, k, tuple(states))
    return Verdict(True, None, tuple(states))
