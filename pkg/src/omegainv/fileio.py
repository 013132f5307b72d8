"""JSON/CSV persistence for sets, automata, problems, reports and traces.

Floats are written with Python's shortest round-trip representation, so
every artifact reads back bit-identically.
"""
from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .automata import AssumptionReport, Labeling, RabinAutomaton, check_assumptions
from .geometry import PCollection, Polytope
from .product import HybridSet
from .system import LinearSystem


class ProblemFormatError(ValueError):
    """Schema violation, located by a dotted field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# sets


def polytope_to_dict(P: Polytope) -> dict:
    return {"A": P.A.tolist(), "b": P.b.tolist(), "eq_pairs": [list(p) for p in P.eq_pairs]}


def pcollection_to_dict(U: PCollection) -> dict:
    return {"dim": U.dim, "polytopes": [polytope_to_dict(P) for P in U.members]}


def polytope_from_dict(d, path="polytope", dim=None) -> Polytope:
    if not isinstance(d, dict):
        raise ProblemFormatError(path, "expected an object")
    if "lo" in d or "hi" in d:
        try:
            lo, hi = np.asarray(d["lo"], float), np.asarray(d["hi"], float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFormatError(path, f"bad box bounds ({exc})") from None
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ProblemFormatError(path, "box bounds must be equal-length vectors")
        return Polytope.from_bounds(lo, hi)
    if "A" not in d or "b" not in d:
        raise ProblemFormatError(path, "polytope needs 'A' and 'b' (or 'lo'/'hi')")
    try:
        A = np.asarray(d["A"], float)
        b = np.asarray(d["b"], float)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(path, f"non-numeric entries ({exc})") from None
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ProblemFormatError(path, f"inconsistent shapes A{A.shape} b{b.shape}")
    if dim is not None and A.shape[1] != dim:
        raise ProblemFormatError(path, f"dimension {A.shape[1]}, expected {dim}")
    return Polytope(A, b)


def pcollection_from_dict(d, path="set", dim=None) -> PCollection:
    if isinstance(d, dict) and "polytopes" in d:
        n = d.get("dim", dim)
        if not isinstance(n, int) or n < 1:
            raise ProblemFormatError(f"{path}.dim", "positive integer required")
        if dim is not None and n != dim:
            raise ProblemFormatError(f"{path}.dim", f"dimension {n}, expected {dim}")
        members = [polytope_from_dict(p, f"{path}.polytopes[{i}]", n)
                   for i, p in enumerate(d["polytopes"])]
        return PCollection(n, members)
    P = polytope_from_dict(d, path, dim)
    return PCollection(P.dim, [P])


def single_polytope(d, path, dim=None) -> Polytope:
    U = pcollection_from_dict(d, path, dim)
    if U.num != 1:
        raise ProblemFormatError(path, "exactly one polytope required")
    return U.members[0]


def hybrid_to_dict(H: HybridSet) -> dict:
    return {"dim": H.dim,
            "slices": [{"q": q, "qp": qp, "set": pcollection_to_dict(S)}
                       for (q, qp), S in H.items()]}


def hybrid_from_dict(d, path="hybrid") -> HybridSet:
    if not isinstance(d, dict) or "slices" not in d:
        raise ProblemFormatError(path, "expected {'slices': [...]}")
    slices = {}
    dim = d.get("dim")
    for i, s in enumerate(d["slices"]):
        S = pcollection_from_dict(s["set"], f"{path}.slices[{i}].set", dim)
        dim = S.dim
        slices[(s["q"], s["qp"])] = S
    if dim is None:
        raise ProblemFormatError(path, "cannot infer dimension of an empty hybrid set")
    return HybridSet(dim, slices)


# ---------------------------------------------------------------------------
# automata


def automaton_to_dict(aut: RabinAutomaton) -> dict:
    return {"states": list(aut.states), "initial": aut.initial, "alphabet": list(aut.alphabet),
            "delta": [[q, s, q2] for q, s, q2 in aut.transitions()],
            "pairs": [{"E": sorted(p.E), "F": sorted(p.F)} for p in aut.pairs]}


def automaton_from_dict(d, path="automaton") -> RabinAutomaton:
    try:
        triples = [tuple(t) for t in d["delta"]]
        pairs = [(p["E"], p["F"]) for p in d.get("pairs", [])]
        return RabinAutomaton.from_triples(d["states"], d["initial"], d["alphabet"], triples, pairs)
    except KeyError as exc:
        raise ProblemFormatError(path, f"missing field {exc}") from None
    except ValueError as exc:
        raise ProblemFormatError(path, str(exc)) from None


def labeling_to_dict(lab: Labeling) -> dict:
    out = {str(s): pcollection_to_dict(R) for s, R in lab.regions.items()}
    if lab.outside is not None:
        out[str(lab.outside)] = "outside"
    return out


def labeling_from_dict(d, path="labeling", dim=None) -> Labeling:
    if not isinstance(d, dict):
        raise ProblemFormatError(path, "expected an object")
    regions, outside = {}, None
    for s, v in d.items():
        if v == "outside":
            if outside is not None:
                raise ProblemFormatError(f"{path}.{s}", "more than one outside symbol")
            outside = s
        else:
            regions[s] = pcollection_from_dict(v, f"{path}.{s}", dim)
    try:
        return Labeling(regions, outside)
    except ValueError as exc:
        raise ProblemFormatError(path, str(exc)) from None


# ---------------------------------------------------------------------------
# problem files


@dataclass
class ProblemFile:
    system: LinearSystem
    automaton: RabinAutomaton
    labeling: Labeling
    defaults: Dict[str, Any] = field(default_factory=dict)
    name: str = ""
    assumptions: Optional[AssumptionReport] = None


def problem_to_dict(prob: ProblemFile) -> dict:
    sys = prob.system
    system = {"A": sys.A.tolist(), "B": sys.B.tolist(),
              "U": pcollection_to_dict(PCollection(sys.m, [sys.U])),
              "W": pcollection_to_dict(PCollection(sys.n, [sys.W]))}
    if sys.X0 is not None:
        system["X0"] = pcollection_to_dict(sys.X0)
    return {"name": prob.name, "system": system,
            "automaton": automaton_to_dict(prob.automaton),
            "labeling": labeling_to_dict(prob.labeling),
            "defaults": prob.defaults}


def problem_from_dict(d: dict, *, check: bool = True) -> ProblemFile:
    if not isinstance(d, dict):
        raise ProblemFormatError("$", "expected an object")
    for key in ("system", "automaton", "labeling"):
        if key not in d:
            raise ProblemFormatError(key, "missing section")
    s = d["system"]
    try:
        A = np.asarray(s["A"], float)
        B = np.asarray(s["B"], float)
    except KeyError as exc:
        raise ProblemFormatError(f"system.{exc.args[0]}", "missing field") from None
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError("system", f"non-numeric matrix ({exc})") from None
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ProblemFormatError("system.A", f"square matrix required, got shape {A.shape}")
    n = A.shape[0]
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != n:
        raise ProblemFormatError("system.B", f"expected {n} rows, got shape {B.shape}")
    m = B.shape[1]
    for key in ("U", "W"):
        if key not in s:
            raise ProblemFormatError(f"system.{key}", "missing field")
    U = single_polytope(s["U"], "system.U")
    if U.dim != m:
        raise ProblemFormatError("system.U", f"dimension {U.dim} does not match B's {m} columns")
    W = single_polytope(s["W"], "system.W", n)
    X0 = pcollection_from_dict(s["X0"], "system.X0", n) if "X0" in s else None
    aut = automaton_from_dict(d["automaton"])
    lab = labeling_from_dict(d["labeling"], dim=n)
    for sym in lab.symbols:
        if sym not in aut.alphabet:
            raise ProblemFormatError(f"labeling.{sym}", "symbol not in the automaton alphabet")
    for sym in aut.alphabet:
        if sym not in lab.symbols:
            raise ProblemFormatError("labeling", f"alphabet symbol {sym!r} has no region")
    sys = LinearSystem(A, B, U, W, X0)
    prob = ProblemFile(sys, aut, lab, dict(d.get("defaults", {})), d.get("name", ""))
    if check:
        prob.assumptions = check_assumptions(aut, lab, sys)
    return prob


def parse_problem(path, *, check: bool = True) -> ProblemFile:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return problem_from_dict(data, check=check)


def write_problem(prob: ProblemFile, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(prob), indent=1))


def builtin_problem(name: str) -> Path:
    """Path of a problem file shipped with the package."""
    from importlib import resources
    return Path(str(resources.files("omegainv") / "problems" / f"{name}.json"))


# ---------------------------------------------------------------------------
# generic helpers


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def write_csv(path, header: List[str], rows) -> None:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(float(v) + 0.0) if isinstance(v, (float, np.floating)) else v)
                    for v in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]
