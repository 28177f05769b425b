import numpy as np
import pytest

from pricechain.distributions import Uniform
from pricechain.exceptions import ConfigurationError
from pricechain.market import oracle_allocate
from pricechain.oracle_suite import corollary_applies
from pricechain.static_pricing import (
    CostAccuracyCurve,
    Scenario,
    enumerate_cases,
    new_state,
    optimize_case,
    optimize_costs,
    price_next,
    price_single,
    revenue_curve,
    solve_chain,
    state_before,
)
from pricechain.utility import UtilityFamily

from conftest import linear, make_block_instance, make_s2
from oracles import sequential_static


def _by_kind(cases):
    return {c.kind: c for c in cases}


def test_price_single_s2(s2_single):
    p, alloc, r = price_single(s2_single)
    assert p == pytest.approx(0.3, abs=1e-9)
    assert alloc.intervals[0] == pytest.approx((0.3, 0.6), abs=1e-9)
    assert r == pytest.approx(0.09, abs=1e-12)


def test_price_single_zero_width_market():
    fam = UtilityFamily((linear(1.0),), (0.05, 1.0), 1.2)
    curve = CostAccuracyCurve("table", (0.0, 1.0), (0.05, 1.0))
    # Accuracy must sit above the lower bound, so go as close as allowed.
    scn = Scenario((1e-12,), fam, Uniform(0.05, 1.0, 0.95), curve)
    _, _, r = price_single(scn)
    assert r == pytest.approx(0.0, abs=1e-12)


def test_price_single_zero_cap():
    fam = UtilityFamily((linear(1.0),), (0.05, 1.0), 0.0)
    scn = Scenario((0.05,), fam, Uniform(0.05, 1.0, 0.95), CostAccuracyCurve("table", (0.05,), (0.6,)))
    p, _, r = price_single(scn)
    assert p == 0.0 and r == 0.0


def test_s2_descriptors(s2):
    state = state_before(s2, 1)
    f, A = s2.family.members[1], s2.accuracies[1]
    cases = enumerate_cases(state.pieces, f, A, 0.05, 1.2)
    assert [c.kind for c in cases] == ["full-coverage", "competition", "no-competition-adjacent"]
    kinds = _by_kind(cases)
    assert (kinds["full-coverage"].lo, kinds["full-coverage"].hi) == pytest.approx((0.0, 0.6), abs=1e-12)
    assert (kinds["competition"].lo, kinds["competition"].hi) == pytest.approx((0.6, 0.9), abs=1e-12)
    assert kinds["competition"].label == "competition-with-1"
    assert (kinds["no-competition-adjacent"].lo, kinds["no-competition-adjacent"].hi) == pytest.approx(
        (0.9, 1.2), abs=1e-12
    )


def test_empty_envelope_gives_single_case(s2):
    cases = enumerate_cases([], s2.family.members[0], 0.6, 0.05, 1.2)
    assert [c.kind for c in cases] == ["single"]


def test_s2_case_objectives(s2):
    state = state_before(s2, 1)
    f, A = s2.family.members[1], s2.accuracies[1]
    kinds = _by_kind(enumerate_cases(state.pieces, f, A, 0.05, 1.2))
    comp = optimize_case(kinds["competition"], state.pieces, f, A, 0.05, s2.dist)
    assert comp.price == pytest.approx(0.75, abs=1e-9)
    assert comp.objective == pytest.approx(0.3825, abs=1e-9)
    adj = optimize_case(kinds["no-competition-adjacent"], state.pieces, f, A, 0.05, s2.dist)
    assert adj.price == pytest.approx(1.2) and adj.objective == pytest.approx(0.36)
    assert adj.total == pytest.approx(0.45)
    full = optimize_case(kinds["full-coverage"], state.pieces, f, A, 0.05, s2.dist)
    assert full.price == pytest.approx(0.6, abs=1e-9)
    assert full.objective == pytest.approx(0.36, abs=1e-8)


def test_s2_chain(s2, s2_solution):
    sol = s2_solution
    assert sol.prices == pytest.approx((0.3, 1.2), abs=1e-9)
    assert sol.revenues == pytest.approx((0.09, 0.36), abs=1e-9)
    assert sol.objective == pytest.approx(0.30, abs=1e-9)
    assert sol.total_revenue == pytest.approx(0.45, abs=1e-9)
    assert sol.case_labels == ("single", "no-competition-adjacent")
    assert [v for iv in sol.allocation.intervals for v in iv] == pytest.approx([0.3, 0.6, 0.6, 0.9], abs=1e-9)


def test_s2_chain_against_brute_force(s2, s2_solution):
    fam = s2.family.members
    prices, revenues, intervals = sequential_static(
        fam, s2.accuracies, s2.dist.pdf, (0.05, 1.0), 1.2, price_step=1e-3, buyer_n=20_000
    )
    assert prices == pytest.approx(list(s2_solution.prices), abs=2e-3)
    assert revenues == pytest.approx(list(s2_solution.revenues), abs=2e-3)


def test_single_model_chain_equals_price_single(s2_single):
    sol = solve_chain(s2_single)
    p, _, r = price_single(s2_single)
    assert sol.prices == (p,) and sol.revenues[0] == pytest.approx(r)


def test_dominated_model_left_out():
    # With a zero price cap nothing the second model does adds revenue.
    fam = UtilityFamily((linear(1.0), linear(2.0)), (0.0, 1.0), 0.0)
    curve = CostAccuracyCurve("table", (0.1, 0.2), (0.9, 0.95))
    sol = solve_chain(Scenario((0.1, 0.2), fam, Uniform(0.0, 1.0), curve))
    assert sol.active[1] is False
    assert sol.case_labels[1] == "inactive"
    assert sol.allocation.intervals[1] is None and sol.revenues[1] == 0.0


def test_step_total_never_drops(s2):
    state = price_next(new_state(s2))
    before = state.total()
    price_next(state)
    assert state.total() >= before


def test_duplicate_utilities_rejected():
    fam = UtilityFamily((linear(1.0), linear(1.0)), (0.05, 1.0), 1.2)
    with pytest.raises(ConfigurationError):
        Scenario((0.05, 0.1), fam, Uniform(0.05, 1.0, 0.95), CostAccuracyCurve("table", (0.05, 0.1), (0.6, 0.9)))


def test_block_coverage_edge_has_zero_utility():
    scn = make_block_instance()
    sol = solve_chain(scn)
    assert sol.case_labels == ("single", "no-competition-adjacent", "block-coverage")
    assert sol.prices == pytest.approx((0.3, 1.2, 1.8), abs=1e-9)
    assert sol.allocation.intervals[1] is None
    assert sol.allocation.intervals[2] == pytest.approx((0.6, 1.0), abs=1e-9)
    chosen = sol.trace[2].chosen
    assert corollary_applies(chosen, scn)
    edge = scn.accuracies[chosen.case.ref]
    assert abs(scn.family.members[2](sol.prices[2], edge)) <= 1e-6


def test_block_instance_against_brute_force():
    scn = make_block_instance()
    sol = solve_chain(scn)
    prices, revenues, _ = sequential_static(
        scn.family.members, scn.accuracies, scn.dist.pdf, (0.05, 1.0), 2.0, price_step=1e-3, buyer_n=20_000
    )
    assert prices[0] == pytest.approx(sol.prices[0], abs=2e-3)
    assert prices[2] == pytest.approx(sol.prices[2], abs=2e-3)
    assert sum(revenues) == pytest.approx(sol.total_revenue, abs=2e-3)


def test_optimize_costs_single_tuple(s2):
    res = optimize_costs(s2, (0.05, 0.1))
    assert res.best.scenario.costs == (0.05, 0.1)
    assert res.best.objective == pytest.approx(0.30, abs=1e-9)
    assert len(res.evaluated) == 1


def test_optimize_costs_counts_and_errors():
    fam = UtilityFamily((linear(1.0), linear(2.0)), (0.0, 1.0), 1.2)
    curve = CostAccuracyCurve("saturating", a_max=1.0, rate=3.0)
    scn = Scenario((0.1, 0.2), fam, Uniform(0.0, 1.0), curve)
    res = optimize_costs(scn, (0.1, 0.2, 0.3, 0.4, 0.5))
    assert len(res.evaluated) == 10
    best = max(v for _, v in res.evaluated)
    assert res.best.objective == best
    assert res.best.scenario.costs == min(c for c, v in res.evaluated if v == best)
    with pytest.raises(ConfigurationError):
        optimize_costs(scn, ())
    with pytest.raises(ConfigurationError):
        optimize_costs(scn, (0.1,))


def test_optimize_costs_all_losing():
    fam = UtilityFamily((linear(1.0), linear(2.0)), (0.0, 1.0), 1.2)
    curve = CostAccuracyCurve("saturating", a_max=1.0, rate=3.0)
    scn = Scenario((5.0, 6.0), fam, Uniform(0.0, 1.0), curve)
    res = optimize_costs(scn, (5.0, 6.0, 7.0))
    assert res.best.objective == 0.0
    assert all(v == 0.0 for _, v in res.evaluated)


def test_revenue_curve_s2(s2):
    state = state_before(s2, 1)
    curve = revenue_curve(state, np.linspace(0.0, 1.2, 12001))
    assert curve.revenues[0] == 0.0
    assert curve.max_jump <= 5e-4
    one = revenue_curve(state, [0.5])
    assert len(one.revenues) == 1 and one.max_jump == 0.0
    assert one.revenues[0] == pytest.approx(0.5 * (0.9 - 0.25))


def test_revenue_curve_matches_oracle(s2):
    state = state_before(s2, 1)
    grid = np.linspace(0.0, 1.2, 25)
    curve = revenue_curve(state, grid)
    for p, r in zip(grid, curve.revenues):
        orc = oracle_allocate((state.prices[0], p), s2.family, s2.accuracies, s2.dist, 100_000)
        assert r == pytest.approx(orc.revenues[1], abs=3e-5)


def test_solution_invariants_s2(s2_solution):
    ivs = s2_solution.allocation.intervals
    assert ivs[0][0] < ivs[0][1] <= ivs[1][0] < ivs[1][1]
    assert s2_solution.profits == pytest.approx((0.04, 0.26))


def test_curve_validation():
    with pytest.raises(ConfigurationError):
        CostAccuracyCurve("table", (0.1, 0.1), (0.5, 0.6))
    with pytest.raises(ConfigurationError):
        CostAccuracyCurve("saturating", a_max=0.0)
    with pytest.raises(ConfigurationError):
        CostAccuracyCurve("steps")
    c = CostAccuracyCurve("table", (0.05, 0.1), (0.6, 0.9))
    assert c(0.075) == pytest.approx(0.75)
    with pytest.raises(ConfigurationError):
        c(0.2)
    assert make_s2().accuracies == (0.6, 0.9)
