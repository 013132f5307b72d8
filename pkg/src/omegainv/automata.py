"""Deterministic Rabin automata and polytopic labelings.

The automaton handed to the synthesis layer is the complement ``A^c`` of the
desired property: a run is rejected by the property iff some accepting pair
``<E_r, F_r>`` of ``A^c`` fires.  Synthesis keeps runs out of ``E`` entirely.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .geometry import PCollection, Polytope
from .system import LinearSystem
from .tolerances import TOL_GEOM

State = Hashable
Symbol = Hashable


class AutomatonError(ValueError):
    pass


class LabelingInconsistencyError(ValueError):
    """Two regions claim the same point beyond tolerance."""


@dataclass(frozen=True)
class AcceptingPair:
    E: frozenset
    F: frozenset


@dataclass(frozen=True)
class RabinAutomaton:
    states: Tuple[State, ...]
    initial: State
    alphabet: Tuple[Symbol, ...]
    delta: Mapping[Tuple[State, Symbol], State]
    pairs: Tuple[AcceptingPair, ...] = ()
    E: frozenset = field(init=False)
    F: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "delta", dict(self.delta))
        object.__setattr__(self, "pairs", tuple(
            p if isinstance(p, AcceptingPair) else AcceptingPair(frozenset(p[0]), frozenset(p[1]))
            for p in self.pairs))
        qs = set(self.states)
        if self.initial not in qs:
            raise AutomatonError(f"initial state {self.initial!r} not in Q")
        for q in self.states:
            for s in self.alphabet:
                if (q, s) not in self.delta:
                    raise AutomatonError(f"transition function undefined on ({q!r}, {s!r})")
        for (q, s), q2 in self.delta.items():
            if q not in qs or q2 not in qs or s not in self.alphabet:
                raise AutomatonError(f"transition ({q!r}, {s!r}) -> {q2!r} uses unknown ids")
        E = frozenset().union(*(p.E for p in self.pairs)) if self.pairs else frozenset()
        F = frozenset().union(*(p.F for p in self.pairs)) if self.pairs else frozenset()
        for S in (E, F):
            if not S <= qs:
                raise AutomatonError(f"accepting pair mentions unknown states {set(S - qs)}")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)

    @classmethod
    def from_triples(cls, states, initial, alphabet, triples, pairs=()) -> "RabinAutomaton":
        return cls(states, initial, alphabet, {(q, s): q2 for q, s, q2 in triples}, pairs)

    def transitions(self) -> List[Tuple[State, Symbol, State]]:
        return [(q, s, self.delta[q, s]) for q in self.states for s in self.alphabet]


def step(aut: RabinAutomaton, q: State, sym: Symbol) -> State:
    try:
        return aut.delta[q, sym]
    except KeyError:
        raise AutomatonError(f"unknown state/symbol ({q!r}, {sym!r})") from None


def out_states(aut: RabinAutomaton, q: State) -> frozenset:
    if q not in aut.states:
        raise AutomatonError(f"unknown state {q!r}")
    return frozenset(aut.delta[q, s] for s in aut.alphabet)


def run(aut: RabinAutomaton, word: Iterable[Symbol], q: Optional[State] = None) -> List[State]:
    """States visited while reading ``word`` from ``q`` (default: initial)."""
    q = aut.initial if q is None else q
    visited = [q]
    for s in word:
        q = step(aut, q, s)
        visited.append(q)
    return visited


class Labeling:
    """Map from symbols to P-collections; at most one ``outside`` symbol
    stands for the complement of the union of the others."""

    def __init__(self, regions: Mapping[Symbol, PCollection], outside: Optional[Symbol] = None):
        self.regions: Dict[Symbol, PCollection] = dict(regions)
        self.outside = outside
        dims = {R.dim for R in self.regions.values()}
        if len(dims) > 1:
            raise ValueError(f"labeling regions of mixed dimensions {dims}")
        self.dim = dims.pop() if dims else None
        for s, R in self.regions.items():
            if R.is_empty():
                raise ValueError(f"region of symbol {s!r} is empty")
        if outside is not None and outside in self.regions:
            raise ValueError(f"outside symbol {outside!r} also has an explicit region")

    @property
    def symbols(self) -> List[Symbol]:
        out = list(self.regions)
        if self.outside is not None:
            out.append(self.outside)
        return out

    def region(self, sym: Symbol) -> Optional[PCollection]:
        """Region of ``sym``; ``None`` for the (unbounded) outside symbol."""
        if sym == self.outside:
            return None
        return self.regions[sym]

    def depth(self, sym: Symbol, x) -> float:
        """Largest margin by which ``x`` satisfies some member of the region."""
        x = np.asarray(x, float)
        R = self.regions[sym]
        return max(float(np.min(P.b - P.A @ x)) if P.numh else np.inf for P in R.members)

    def label(self, x) -> Symbol:
        """Symbol of ``x``; boundary ties go to the region containing ``x`` deepest."""
        claims = [(self.depth(s, x), s) for s in self.regions]
        inside = [(d, s) for d, s in claims if d >= -TOL_GEOM]
        if not inside:
            if self.outside is None:
                raise LabelingInconsistencyError(f"no region contains {x} and there is no outside symbol")
            return self.outside
        deep = [s for d, s in inside if d > TOL_GEOM]
        if len(deep) > 1:
            raise LabelingInconsistencyError(f"point {x} lies inside regions {deep}")
        return max(inside, key=lambda t: t[0])[1]


def label(lab: Labeling, x) -> Symbol:
    return lab.label(x)


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: object = None


@dataclass
class AssumptionReport:
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [{"name": c.name, "passed": c.passed, "witness": _jsonable(c.witness)}
                           for c in self.checks]}


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def transition_region(aut: RabinAutomaton, lab: Labeling, q: State, q2: State):
    """Union of labeled regions driving ``q`` to ``q2``; ``None`` if it
    includes the outside symbol (unbounded), empty collection if no symbol."""
    members = []
    for s in aut.alphabet:
        if aut.delta[q, s] != q2:
            continue
        if s == lab.outside:
            return None
        if s not in lab.regions:
            continue
        members.extend(lab.regions[s].members)
    return PCollection(lab.dim, members)


def check_assumptions(aut: RabinAutomaton, lab: Labeling, sys: LinearSystem) -> AssumptionReport:
    """Diagnostic report: bounded transition regions outside E,
    controllability of (A, B), bounded U and W."""
    checks = []
    unbounded = []
    for q in aut.states:
        if q in aut.E:
            continue
        for q2 in out_states(aut, q):
            if q2 in aut.E:
                continue
            R = transition_region(aut, lab, q, q2)
            if R is None or not all(P.is_bounded() for P in R.members):
                unbounded.append([q, q2])
    checks.append(CheckResult("bounded_regions", not unbounded, unbounded or None))
    rank = sys.controllability_rank()
    checks.append(CheckResult("controllable", rank == sys.n, {"rank": rank, "n": sys.n}))
    bad = [name for name, S in (("U", sys.U), ("W", sys.W))
           if S.is_empty() or not S.is_bounded()]
    checks.append(CheckResult("bounded_U_W", not bad, bad or None))
    return AssumptionReport(checks)
