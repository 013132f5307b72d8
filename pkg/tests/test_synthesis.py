import numpy as np
import pytest

from omegainv import geometry as geo
from omegainv import synthesis as syn
from omegainv.geometry import PCollection, Polytope
from omegainv.product import HybridSet, hybrid_contains

import oracles
from conftest import A_RUN, B_RUN, safety_product


def box(lo, hi):
    return Polytope.from_bounds(lo, hi)


ZERO2 = Polytope.point([0.0, 0.0])


# ---------------------------------------------------------------------------
# maximal HCI


def test_absorbing_origin_fixed_point_at_one():
    prod = safety_product(np.zeros((2, 2)), np.zeros((2, 1)), box([-1], [1]), ZERO2,
                          box([-1, -1], [1, 1]))
    r = syn.maximal_hci(prod, 10)
    assert r.terminated == "fixed_point" and r.iterations == 1
    assert hybrid_contains(prod.i0(), r.result) and hybrid_contains(r.result, prod.i0())
    assert r.certified


def test_unstable_scalar_shrinks_until_cap():
    prod = safety_product(2 * np.eye(1), np.zeros((1, 1)), box([-1], [1]), Polytope.point([0.0]),
                          box([-1], [1]))
    r = syn.maximal_hci(prod, 10)
    assert r.terminated == "iteration_cap" and r.iterations == 10
    expected = PCollection.of(box([-2.0 ** -10], [2.0 ** -10]))
    assert geo.set_equal(r.result[("ok", "ok")], expected)


def test_maximal_matches_grid_oracle():
    U, W = box([-0.05], [0.05]), box([-0.03, -0.03], [0.03, 0.03])
    safe = box([-1, -1], [1, 1])
    prod = safety_product(A_RUN, B_RUN, U, W, safe)
    r = syn.maximal_hci(prod, 100)
    assert r.terminated == "fixed_point" and r.certified
    H = r.result[("ok", "ok")]
    pts, keep = oracles.grid_invariant(A_RUN, B_RUN, [-1, -1], [1, 1], -0.05, 0.05, 0.03)
    kept = pts[keep]
    inside = pts[[H.contains(p) for p in pts]]
    d1 = max(min(oracles.inf_distance(x, M.A, M.b) for M in H.members) for x in kept)
    d2 = max(np.abs(kept - x).max(axis=1).min() for x in inside)
    assert max(d1, d2) <= 0.1


def test_maximal_running_example(prod):
    r = syn.maximal_hci(prod, 50)
    assert r.terminated == "fixed_point"
    assert r.certified


# ---------------------------------------------------------------------------
# constants and null-controllable sets


def test_deadbeat_constants():
    c = syn.contraction_constants(np.zeros((2, 2)), np.eye(2), "closed_form")
    assert c.n_prime == 2
    assert c.c_x == pytest.approx(1.0)
    assert 0 < c.c_u <= 1e-6


def test_uncontrollable_constants():
    with pytest.raises(syn.UncontrollableError) as exc:
        syn.contraction_constants(np.eye(2), np.array([[1.0], [0.0]]))
    assert exc.value.rank == 1


@pytest.mark.parametrize("method", ["closed_form", "lp_vertex"])
def test_running_example_constants(method):
    c = syn.contraction_constants(A_RUN, B_RUN, method, 2)
    assert c.n_prime == 2
    assert all(syn.replay_constraints(A_RUN, B_RUN, c.c_x, c.c_u, 2))
    ex, eu = c.eps(0.01)
    N = syn.null_controllable_seq(A_RUN, B_RUN, ex, eu, 2)
    assert geo.contains_set(PCollection.of(geo.ball(2, 0.01)), PCollection.of(N[2]))


def test_closed_form_input_constant_is_exact():
    c = syn.contraction_constants(A_RUN, B_RUN, "closed_form")
    C = np.hstack([B_RUN, A_RUN @ B_RUN])
    ref = np.abs(np.linalg.solve(C, A_RUN @ A_RUN)).sum(axis=1).max()
    assert c.c_u == pytest.approx(ref, rel=1e-12)
    assert c.c_u == pytest.approx(0.67251, abs=5e-6)


def test_reported_constants_replay():
    # eps_x = 2.8636, eps_u = 0.67251 at gamma = 0.01
    assert all(syn.replay_constraints(A_RUN, B_RUN, 286.36, 67.251, 2))


def test_replay_rejects_tiny_input_bound():
    assert not all(syn.replay_constraints(A_RUN, B_RUN, 100.0, 0.1, 2))


def test_null_controllable_trivial_cases():
    N = syn.null_controllable_seq(np.eye(2), np.eye(2), 10.0, 1.0, 1)
    assert np.allclose(N[0].vertices(), [[0, 0]])
    assert geo.set_equal(PCollection.of(N[1]), PCollection.of(geo.ball(2, 1.0)))
    N = syn.null_controllable_seq(np.zeros((2, 2)), np.eye(2), 0.3, 0.1, 2)
    assert geo.set_equal(PCollection.of(N[1]), PCollection.of(geo.ball(2, 0.3)))
    with pytest.raises(ValueError):
        syn.null_controllable_seq(np.eye(2), np.eye(2), 0.0, 1.0, 1)


def test_null_controllable_sets_within_state_bound():
    N = syn.null_controllable_seq(A_RUN, B_RUN, 0.05, 0.01, 2)
    for S in N.sets[1:]:
        assert S.subset_of(geo.ball(2, 0.05))


# ---------------------------------------------------------------------------
# approximation schemes


def test_expansion_running_example(expansion_report, prod):
    r = expansion_report
    assert r.terminated in ("fixed_point", "stop_criterion")
    assert r.iterations == 3
    assert r.certified
    assert 16 <= r.numh <= 33


def test_contraction_running_example(contraction_report):
    r = contraction_report
    assert r.terminated in ("fixed_point", "stop_criterion")
    assert r.iterations == 4
    assert r.certified
    assert 24 <= r.numh <= 48


def test_overcontraction_gives_empty(prod, lp_constants):
    r = syn.synth_contraction(prod, 1.0, lp_constants)
    assert r.terminated == "empty"
    assert r.result.is_empty()


def test_scheme_ordering(prod, expansion_report):
    nominal = syn.maximal_hci(prod, expansion_report.iterations, certify=False)
    assert hybrid_contains(expansion_report.result, nominal.result)


def test_contraction_within_nominal_iterates(prod, contraction_report):
    I = prod.i0()
    for _ in range(contraction_report.iterations + 1):
        assert hybrid_contains(contraction_report.result, I)
        I = syn._iterate(prod, prod.i0(), I, syn.NOMINAL)


def test_certificate_cross_checked_per_point(prod, expansion_report):
    H = expansion_report.result
    rng = np.random.default_rng(11)
    from omegainv.controller import sample_collection
    for key, C in H.items():
        for _ in range(500 // len(H)):
            x = sample_collection(C, rng)
            assert syn.has_robust_input(prod, H, key, x)


def test_certify_empty_is_true(prod):
    assert syn.certify_hci(prod, HybridSet(2)).certified


def test_certify_rejects_shrinking_system():
    prod = safety_product(2 * np.eye(2), np.zeros((2, 1)), box([-1], [1]), ZERO2,
                          box([-1, -1], [1, 1]))
    cert = syn.certify_hci(prod, prod.i0())
    assert not cert.certified
    assert cert.key == ("ok", "ok")
    x = cert.point
    assert prod.i0()[cert.key].contains(x)
    assert not syn.has_robust_input(prod, prod.i0(), cert.key, x)


def test_monotone_guard_raises():
    small = HybridSet(2, {("a", "a"): PCollection.of(box([0, 0], [1, 1]))})
    big = HybridSet(2, {("a", "a"): PCollection.of(box([0, 0], [2, 1]))})
    syn._check_monotone(small, big, 1)
    with pytest.raises(syn.MonotonicityError):
        syn._check_monotone(big, small, 1)


def test_report_json_roundtrip(expansion_report):
    from omegainv.fileio import hybrid_from_dict
    from omegainv.product import hybrid_equal
    d = expansion_report.to_dict(timing=False)
    assert "elapsed_s" not in d
    assert d["iterations"] == 3
    assert hybrid_equal(hybrid_from_dict(d["result"]), expansion_report.result)
