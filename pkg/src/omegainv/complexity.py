"""Worst-case space bounds for the fixed-point iteration and observed growth.

The bounds assume ``W = {0}``; applied to disturbed runs they are only a
diagnostic.  All arithmetic is on Python integers, so nothing overflows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from . import geometry as geo
from .automata import out_states
from .product import ProductSystem


class UnsupportedDimensionError(ValueError):
    pass


def g_tilde_bound(n: int, p: int, p_U: int) -> int:
    """Upper bound on the facet count of ``pre(X')`` for ``numh(X') = p``."""
    if n == 1:
        return 2
    if n == 2:
        return p_U + p
    if n == 3:
        return (4 * p_U - 9) * p + 26 - 9 * p_U
    raise UnsupportedDimensionError(f"no facet bound known for n = {n}")


def g_recursive(n: int, p_prime: int, p_U: int, i: int) -> int:
    """``g^0 = p'``, ``g^i = p' + g~(g^{i-1})``."""
    g = p_prime
    for _ in range(i):
        g = p_prime + g_tilde_bound(n, g, p_U)
    return g


def g_bound(n: int, p_prime: int, p_U: int, i: int) -> int:
    """Closed-form bound on ``larg`` of the i-th iterate."""
    if i < 0:
        raise ValueError("iteration index must be nonnegative")
    if n not in (1, 2, 3):
        raise UnsupportedDimensionError(f"no closed form known for n = {n}")
    if i == 0:
        return p_prime
    if n == 1:
        return 2 * (i + 1)
    if n == 2:
        return p_prime + i * (p_prime + p_U)
    a, b = 4 * p_U - 9, 26 - 9 * p_U
    # (1 - a^k)/(1 - a) as an exact geometric sum
    geom = lambda k: sum(a ** j for j in range(k))
    return geom(i + 1) * p_prime + geom(i) * b


@dataclass(frozen=True)
class ComplexityInputs:
    n: int
    i: int
    alpha: int
    delta_count: int
    M: int
    p_prime: int
    p_U: int

    def __post_init__(self):
        for name in ("n", "alpha", "delta_count", "M", "p_prime", "p_U"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.i < 0:
            raise ValueError("i must be nonnegative")

    def at(self, i: int) -> "ComplexityInputs":
        return ComplexityInputs(self.n, i, self.alpha, self.delta_count, self.M,
                                self.p_prime, self.p_U)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def complexity_inputs(prod: ProductSystem, i: int = 0, I0=None) -> ComplexityInputs:
    """Read the bound parameters off a product system (or a given ``I_0``)."""
    I0 = prod.i0() if I0 is None else I0
    E = prod.E
    alpha = max(len([q2 for q2 in out_states(prod.aut, q) if q2 not in E])
                for q in prod.aut.states if q not in E)
    delta_count = len([k for k in prod.regions if k[0] not in E and k[1] not in E
                       and prod.regions[k] is not None])
    M = max((C.num for _, C in I0.items()), default=1)
    p_prime = max((C.larg for _, C in I0.items()), default=1)
    BU = geo.reduce(geo.linear_image(prod.sys.B, prod.sys.U))
    return ComplexityInputs(prod.n, i, max(alpha, 1), max(delta_count, 1), max(M, 1),
                            max(p_prime, 1), max(BU.numh, 1))


def bound_num(inp: ComplexityInputs) -> int:
    return inp.alpha ** inp.i * inp.M ** (inp.i + 1)


def worst_case(inp: ComplexityInputs) -> int:
    """``|delta| alpha^i M^(i+1) g^i(p') n``."""
    return inp.delta_count * bound_num(inp) * g_bound(inp.n, inp.p_prime, inp.p_U, inp.i) * inp.n


@dataclass(frozen=True)
class GrowthRow:
    iteration: int
    observed_num: int
    observed_larg: int
    bound_num: int
    bound_larg: Optional[int]

    def as_list(self) -> list:
        return [self.iteration, self.observed_num, self.observed_larg, self.bound_num,
                self.bound_larg]


GROWTH_HEADER = ["iteration", "observed_num", "observed_larg", "bound_num", "bound_larg"]


def empirical_growth(report, inp: ComplexityInputs = None, prod: ProductSystem = None) -> List[GrowthRow]:
    """One row per iteration ``i >= 1`` of a synthesis report."""
    stats = [s for s in report.stats if s.index >= 1] if report is not None else []
    if not stats:
        return []
    if inp is None:
        if prod is None:
            raise ValueError("need either complexity inputs or the product system")
        inp = complexity_inputs(prod)
    rows = []
    for s in stats:
        at = inp.at(s.index)
        try:
            bl = g_bound(at.n, at.p_prime, at.p_U, at.i)
        except UnsupportedDimensionError:
            bl = None
        rows.append(GrowthRow(s.index, s.max_num, s.max_larg, bound_num(at), bl))
    return rows


def write_growth_csv(rows: List[GrowthRow], path) -> None:
    from .fileio import write_csv
    write_csv(path, GROWTH_HEADER, [r.as_list() for r in rows])
