import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omegainv import geometry as geo
from omegainv.automata import (AutomatonError, Labeling, LabelingInconsistencyError, RabinAutomaton,
                               check_assumptions, label, out_states, run, step, transition_region)
from omegainv.system import LinearSystem

from conftest import A_RUN, B_RUN


def test_self_loop_step():
    aut = RabinAutomaton.from_triples(["a"], "a", ["x"], [("a", "x", "a")])
    assert step(aut, "a", "x") == "a"
    assert out_states(aut, "a") == {"a"}


def test_partial_transition_function_rejected():
    with pytest.raises(AutomatonError):
        RabinAutomaton.from_triples(["a", "b"], "a", ["x"], [("a", "x", "b")])


def test_unknown_state_in_pair_rejected():
    with pytest.raises(AutomatonError):
        RabinAutomaton.from_triples(["a"], "a", ["x"], [("a", "x", "a")], [({"z"}, set())])


def test_accepting_unions(problem):
    aut = problem.automaton
    assert aut.E == {"q1"}
    assert aut.F == {"q0", "q2"}


def test_running_example_transitions(problem):
    aut = problem.automaton
    assert step(aut, "q0", "p1") == "q2"
    assert step(aut, "q0", "p2") == "q0"
    for s in ("p3", "p4", "p5"):
        assert step(aut, "q0", s) == "q1"
    for s in ("p1", "p2", "p3", "p4"):
        assert step(aut, "q2", s) == "q2"
    assert step(aut, "q2", "p5") == "q1"
    assert out_states(aut, "q1") == {"q1"}
    assert run(aut, ["p2", "p2", "p1", "p3"]) == ["q0", "q0", "q0", "q2", "q2"]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_step_and_out_states_match_table(seed):
    rng = np.random.default_rng(seed)
    Q = [f"s{i}" for i in range(5)]
    sigma = ["a", "b", "c"]
    table = {(q, s): Q[rng.integers(5)] for q in Q for s in sigma}
    aut = RabinAutomaton(Q, "s0", sigma, table)
    for (q, s), q2 in table.items():
        assert step(aut, q, s) == q2
    for q in Q:
        assert out_states(aut, q) == {table[q, s] for s in sigma}


def test_labels_of_running_example(problem):
    lab = problem.labeling
    assert label(lab, [110.5, 0.0]) == "p2"
    assert label(lab, [200.0, 0.0]) == "p5"
    assert label(lab, [109.5, 3.0]) == "p1"
    assert label(lab, [111.5, -3.0]) == "p3"
    assert label(lab, [110.005, 0.0]) == "p4"
    assert label(lab, [110.995, 0.0]) == "p4"


def test_label_scan_oracle(problem):
    lab = problem.labeling
    rng = np.random.default_rng(7)
    for x in rng.uniform([108.5, -12], [112.5, 12], size=(200, 2)):
        inside = [s for s, R in lab.regions.items() if any(np.all(P.A @ x <= P.b) for P in R.members)]
        assert len(inside) <= 1 or label(lab, x) in inside
        assert label(lab, x) == (inside[0] if inside else "p5")


def test_overlapping_regions_rejected():
    lab = Labeling({"a": geo.PCollection.of(geo.Polytope.from_bounds([0], [2])),
                    "b": geo.PCollection.of(geo.Polytope.from_bounds([1], [3]))})
    with pytest.raises(LabelingInconsistencyError):
        lab.label([1.5])


def test_transition_region_with_outside(problem):
    aut, lab = problem.automaton, problem.labeling
    assert transition_region(aut, lab, "q0", "q1") is None
    R = transition_region(aut, lab, "q2", "q2")
    assert R.num == 5
    assert geo.set_equal(R.normalized(), geo.PCollection.of(geo.Polytope.from_bounds([109, -10], [112, 10])))


def test_assumptions_running_example(problem):
    rep = problem.assumptions
    assert rep.passed
    assert rep["controllable"].witness == {"rank": 2, "n": 2}


def test_assumptions_uncontrollable():
    aut = RabinAutomaton.from_triples(["a"], "a", ["s"], [("a", "s", "a")])
    lab = Labeling({"s": geo.PCollection.of(geo.Polytope.from_bounds([-1, -1], [1, 1]))})
    sys = LinearSystem(np.zeros((2, 2)), np.zeros((2, 1)), geo.Polytope.from_bounds([-1], [1]),
                       geo.Polytope.point([0, 0]))
    rep = check_assumptions(aut, lab, sys)
    assert not rep["controllable"].passed
    assert rep["controllable"].witness == {"rank": 0, "n": 2}


def test_assumptions_unbounded_region():
    aut = RabinAutomaton.from_triples(["a"], "a", ["s"], [("a", "s", "a")])
    half = geo.Polytope([[1.0, 0.0]], [0.0])
    lab = Labeling({"s": geo.PCollection.of(half)})
    sys = LinearSystem(A_RUN, B_RUN, geo.Polytope.from_bounds([-1], [1]), geo.Polytope.point([0, 0]))
    rep = check_assumptions(aut, lab, sys)
    assert not rep["bounded_regions"].passed
    assert rep["bounded_regions"].witness == [["a", "a"]]
