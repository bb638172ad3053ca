"""Tests for the offline oracles and auditors."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matroidmatch.algorithms import (
    run_mobm_pd,
    run_mobvc,
    run_obvc,
    run_random_arrival_greedy,
)
from matroidmatch.constants import ALPHA, charge_potential
from matroidmatch.errors import InputError, SizeError
from matroidmatch.instances import (
    Arrival,
    ArrivalModel,
    Instance,
    gen_random,
    gen_upper_triangular,
    make_matroid_suite,
    make_suite,
)
from matroidmatch.submodular import (
    Cardinality,
    GroundSet,
    PartitionBudget,
    UniformRank,
    lovasz,
)
from matroidmatch.verify import (
    audit_charging,
    check_cover,
    check_matching,
    check_weak_duality,
    critical_value,
    expected_rounding_cost,
    offline_opt,
    verify_random_arrival_lemmas,
)

TOL = 1e-9


def single_edge(f=None, n=1):
    g = GroundSet(n)
    return Instance("edge", n, f or Cardinality(g), [Arrival(0, (0,))])


def star(n_offline, f=None):
    g = GroundSet(n_offline)
    return Instance("star", n_offline, f or Cardinality(g),
                    [Arrival(0, tuple(range(n_offline)))])


def two_suitors():
    # both online vertices want the single offline element
    g = GroundSet(1)
    return Instance("two-suitors", 1, Cardinality(g),
                    [Arrival(0, (0,)), Arrival(1, (0,))])


class TestOfflineOpt:
    def test_single_edge(self):
        cert = offline_opt(single_edge())
        assert cert.value == 1.0
        # tie between S = {} and S = {0}; smallest bitmask wins
        assert cert.argmin_offline == frozenset()
        assert cert.cover_online == frozenset({0})

    def test_triangular_three(self):
        cert = offline_opt(gen_upper_triangular(3))
        assert cert.value == 3.0
        assert cert.argmin_offline == frozenset()
        assert cert.cover_online == frozenset({0, 1, 2})

    def test_rank_one_complete(self):
        # sharing one slot beats paying every arrival
        g = GroundSet(2)
        inst = Instance("k23", 2, UniformRank(g, 1),
                        [Arrival(j, (0, 1)) for j in range(3)])
        cert = offline_opt(inst)
        assert cert.value == 1.0
        assert cert.argmin_offline == frozenset({0, 1})
        assert cert.cover_online == frozenset()

    def test_isolated_arrival_is_never_charged(self):
        g = GroundSet(1)
        inst = Instance("lonely", 1, Cardinality(g),
                        [Arrival(0, ()), Arrival(1, (0,))])
        cert = offline_opt(inst)
        assert cert.value == 1.0
        assert 0 not in cert.cover_online

    def test_brute_force_agreement(self):
        for inst in make_suite(count=25, n_max=6, m_max=6, seed=7):
            cert = offline_opt(inst)
            best = min(
                inst.f.value_mask(m) + sum(
                    1 for a in inst.arrivals
                    if (inst.neighbor_mask(a) & ~m) != 0)
                for m in range(1 << inst.n_offline))
            assert math.isclose(cert.value, best, abs_tol=1e-12)

    def test_size_cap(self):
        g = GroundSet(25)
        inst = Instance("big", 25, Cardinality(g), [Arrival(0, (0,))])
        with pytest.raises(SizeError):
            offline_opt(inst)


class TestCheckMatching:
    def test_greedy_matching_is_feasible(self):
        inst = gen_upper_triangular(4)
        trace = run_random_arrival_greedy(inst)
        x = {}
        for rec in trace.rounds:
            if rec.matched is not None:
                x[(rec.matched, rec.v)] = 1.0
        rep = check_matching(x, inst)
        assert rep.ok
        assert rep.details["budget_mode"] == "exhaustive"

    def test_pd_fractional_matching_is_feasible(self):
        for inst in make_suite(count=12, n_max=6, m_max=6, seed=3):
            trace = run_mobm_pd(inst)
            rep = check_matching(trace.state.x, inst)
            assert rep.ok, rep.violations

    def test_negative_mass_rejected(self):
        inst = single_edge()
        rep = check_matching({(0, 0): -0.5}, inst)
        assert not rep.ok
        assert any("< 0" in v for v in rep.violations)

    def test_online_overload_rejected(self):
        inst = star(2)
        rep = check_matching({(0, 0): 0.7, (1, 0): 0.7}, inst)
        assert not rep.ok
        assert any("online mass" in v for v in rep.violations)

    def test_budget_overload_rejected(self):
        inst = two_suitors()
        rep = check_matching({(0, 0): 1.0, (0, 1): 1.0}, inst)
        assert not rep.ok
        assert any("exceeds budget" in v for v in rep.violations)

    def test_non_edge_rejected(self):
        g = GroundSet(2)
        inst = Instance("i", 2, Cardinality(g), [Arrival(0, (0,))])
        rep = check_matching({(1, 0): 0.5}, inst)
        assert not rep.ok

    def test_unknown_vertex_rejected(self):
        inst = single_edge()
        rep = check_matching({(4, 9): 0.5}, inst)
        assert not rep.ok


class TestWeakDualityAndCover:
    def test_pd_traces_satisfy_weak_duality(self):
        for inst in make_suite(count=12, n_max=6, m_max=6, seed=5):
            trace = run_mobm_pd(inst)
            rep = check_weak_duality(trace.state.x, trace.state.y,
                                     trace.state.z, inst.f)
            assert rep.ok, rep.violations

    def test_duality_violation_detected(self):
        g = GroundSet(1)
        f = Cardinality(g)
        rep = check_weak_duality({(0, 0): 2.0}, [0.5], {}, f)
        assert not rep.ok

    def test_cover_feasible_on_mobvc(self):
        inst = gen_upper_triangular(5)
        trace = run_mobvc(inst)
        assert check_cover(trace.state.y, trace.state.z, inst).ok

    def test_cover_gap_detected(self):
        inst = single_edge()
        rep = check_cover([0.3], {0: 0.3}, inst)
        assert not rep.ok
        assert "uncovered" in rep.violations[0]


class TestExpectedRoundingCost:
    def test_matches_dual_value_on_mobvc(self):
        for inst in make_suite(count=10, n_max=6, m_max=6, seed=11):
            trace = run_mobvc(inst)
            got = expected_rounding_cost(inst.f, trace.state.y, trace.state.z)
            assert math.isclose(got, trace.dual_value, abs_tol=1e-9)

    def test_saturates_above_one(self):
        # z past 1 cannot raise the expectation further
        f = Cardinality(GroundSet(1))
        assert math.isclose(expected_rounding_cost(f, [0.0], {0: 1.0 + ALPHA}),
                            1.0, abs_tol=1e-12)

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6),
           st.lists(st.floats(0.0, 1.0), max_size=4))
    @settings(max_examples=60, deadline=None)
    def test_identity_with_lovasz(self, ys, zs):
        g = GroundSet(len(ys))
        f = UniformRank(g, max(1, len(ys) // 2))
        z = {i: v for i, v in enumerate(zs)}
        want = lovasz(f, ys) + sum(zs)
        assert math.isclose(expected_rounding_cost(f, ys, z), want,
                            abs_tol=1e-9)


class TestAuditCharging:
    def test_star_charge_value(self):
        inst = star(2)
        trace = run_obvc(inst)
        cert = offline_opt(inst)
        rep = audit_charging(trace, cert, inst)
        want = 2.0 * ((1.0 + ALPHA) * math.log(2.0) - ALPHA)
        assert math.isclose(rep.rounds[0].charge, want, abs_tol=1e-12)
        assert rep.rounds[0].required == pytest.approx(1.0 - ALPHA)
        assert rep.rounds[0].in_opt_cover  # S* = {} pushes v into the cover
        assert rep.total_charge == 0.0
        assert rep.ok

    def test_pervertex_form_matches_chart(self):
        for inst in make_suite(count=10, n_max=6, m_max=6, seed=13):
            if inst.f.to_spec()["family"] != "cardinality":
                continue
            trace = run_obvc(inst)
            cert = offline_opt(inst)
            for ra in audit_charging(trace, cert, inst).rounds:
                assert ra.pervertex_lhs == pytest.approx(ra.charge, abs=1e-9)

    def test_pervertex_replay(self):
        # second raise of the same element must charge from its old level
        inst = two_suitors()
        trace = run_obvc(inst)
        cert = offline_opt(inst)
        rep = audit_charging(trace, cert, inst)
        F = charge_potential
        assert rep.rounds[1].pervertex_lhs == pytest.approx(
            F(trace.rounds[1].a) - F(trace.rounds[0].a), abs=1e-12)
        assert rep.ok

    def test_suite_audits_pass(self):
        for inst in make_suite(count=40, n_max=7, m_max=7, seed=17):
            cert = offline_opt(inst)
            for run in (run_mobvc, run_mobm_pd):
                rep = audit_charging(run(inst), cert, inst)
                assert rep.ok, (inst.name, run.__name__, rep.to_dict())

    def test_greedy_trace_rejected(self):
        inst = single_edge()
        trace = run_random_arrival_greedy(inst)
        with pytest.raises(InputError):
            audit_charging(trace, offline_opt(inst), inst)

    def test_global_budget_binds_outside_cover(self):
        # rank-one complete 2x2: S* = {0, 1} strictly beats paying both
        # arrivals, so neither is in the cover and the first round's charge
        # of exactly alpha meets the alpha * f(S*) budget with equality
        g = GroundSet(2)
        inst = Instance("k22", 2, UniformRank(g, 1),
                        [Arrival(0, (0, 1)), Arrival(1, (0, 1))])
        trace = run_mobvc(inst)
        cert = offline_opt(inst)
        assert cert.argmin_offline == frozenset({0, 1})
        rep = audit_charging(trace, cert, inst)
        assert not rep.rounds[0].in_opt_cover
        assert not rep.rounds[1].in_opt_cover
        assert rep.total_charge == pytest.approx(ALPHA, abs=1e-12)
        assert rep.budget == pytest.approx(ALPHA, abs=1e-12)
        assert rep.ok


class TestCriticalValue:
    def test_without_only_vertex_nothing_spans(self):
        inst = single_edge()
        assert critical_value(inst, 0, {0: 0.4}) == {0: 1.0}

    def test_two_suitors(self):
        inst = two_suitors()
        ts = {0: 0.3, 1: 0.7}
        assert critical_value(inst, 1, ts) == {0: 0.3}
        assert critical_value(inst, 0, ts) == {0: 0.7}

    def test_unknown_vertex(self):
        with pytest.raises(InputError):
            critical_value(single_edge(), 5, {0: 0.5})

    def test_missing_timestamp(self):
        with pytest.raises(InputError, match="missing"):
            critical_value(two_suitors(), 0, {0: 0.5})


class TestRandomArrivalLemmas:
    def test_single_edge_exact(self):
        rep = verify_random_arrival_lemmas(single_edge(), trials=50, seed=2)
        assert rep.ok
        assert rep.mean_value == 1.0
        assert rep.dominance_checked == 50
        assert rep.dominance_violations == 0
        e = rep.edges[0]
        assert e.mean == pytest.approx(1.0 + ALPHA, abs=1e-9)
        assert e.stderr == pytest.approx(0.0, abs=1e-9)

    def test_matroid_suite_instances_pass(self):
        for inst in make_matroid_suite(count=5, n_max=6, m_max=6, seed=4):
            rep = verify_random_arrival_lemmas(inst, trials=120, seed=9)
            assert rep.ok, (inst.name, rep.to_dict())
            assert rep.monotonicity_min_slack >= -TOL

    def test_rank_zero_edges_skipped(self):
        g = GroundSet(2)
        f = PartitionBudget(g, [[0], [1]], [0.0, 1.0])
        inst = Instance("loopy", 2, f, [Arrival(0, (0, 1))])
        rep = verify_random_arrival_lemmas(inst, trials=30, seed=1)
        assert rep.skipped_rank_zero_edges == 1
        assert len(rep.edges) == 1
        assert rep.edges[0].u == 1
        assert rep.ok

    def test_non_matroid_rejected(self):
        g = GroundSet(2)
        inst = star(2, PartitionBudget(g, [[0], [1]], [0.5, 1.0]))
        with pytest.raises(InputError):
            verify_random_arrival_lemmas(inst, trials=10)

    def test_too_few_trials(self):
        with pytest.raises(InputError):
            verify_random_arrival_lemmas(single_edge(), trials=1)

    def test_report_serializes(self):
        rep = verify_random_arrival_lemmas(single_edge(), trials=10, seed=0)
        d = rep.to_dict()
        assert d["ok"] is True
        assert d["edges"][0]["u"] == 0
