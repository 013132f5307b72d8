import numpy as np
import pytest

from omegainv import geometry as geo
from omegainv import synthesis as syn
from omegainv.automata import Labeling, RabinAutomaton
from omegainv.fileio import builtin_problem, parse_problem
from omegainv.product import build_product
from omegainv.system import LinearSystem

A_RUN = np.array([[0.9990, 0.1846], [-0.0074, 0.5265]])
B_RUN = np.array([[1.0209], [7.3830]])


def safety_automaton():
    """Stay in ``s`` forever; ``o`` leads to the sink ``bad``."""
    return RabinAutomaton.from_triples(
        ["ok", "bad"], "ok", ["s", "o"],
        [("ok", "s", "ok"), ("ok", "o", "bad"), ("bad", "s", "bad"), ("bad", "o", "bad")],
        [({"bad"}, {"ok"})])


def safety_product(A, B, U, W, safe: geo.Polytope, X0=None):
    lab = Labeling({"s": geo.PCollection.of(safe)}, outside="o")
    return build_product(LinearSystem(A, B, U, W, X0), safety_automaton(), lab)


@pytest.fixture(scope="session")
def problem():
    return parse_problem(builtin_problem("running_example"))


@pytest.fixture(scope="session")
def prod(problem):
    return build_product(problem.system, problem.automaton, problem.labeling)


@pytest.fixture(scope="session")
def expansion_report(prod):
    return syn.synth_expansion(prod, 0.1)


@pytest.fixture(scope="session")
def lp_constants(prod):
    return syn.contraction_constants(prod.sys.A, prod.sys.B, "lp_vertex", 2)


@pytest.fixture(scope="session")
def contraction_report(prod, lp_constants):
    return syn.synth_contraction(prod, 0.01, lp_constants)
