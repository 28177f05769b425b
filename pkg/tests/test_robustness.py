from dataclasses import replace
import functools

import pytest
from hypothesis import given, strategies as st

from pricechain.exceptions import ConfigurationError
from pricechain.robustness import (
    LipschitzProfile,
    empirical_perturbation_test,
    endpoint_error_bounds,
    lipschitz_estimate,
    perturbed,
    profile_for,
)
from pricechain.static_pricing import solve_chain
from pricechain.utility import UtilityFunction

from conftest import linear, make_s2

S2_PROFILE = LipschitzProfile((0.99, 1.99), (1.01, 2.01))


def test_lipschitz_examples():
    assert lipschitz_estimate(linear(2.0), 0.5, (0.0, 1.0)) == pytest.approx((1.98, 2.02))
    log = UtilityFunction("log", 1.0)
    assert lipschitz_estimate(log, 0.5, (0.0, 1.0)) == pytest.approx((0.495, 1.01))
    assert lipschitz_estimate(log, 0.5, (1.0, 1.0)) == pytest.approx((0.495, 0.505))
    with pytest.raises(ConfigurationError):
        lipschitz_estimate(log, 0.5, (0.0, 1.0), grid_n=1)


def test_profile_checks():
    assert S2_PROFILE.interleaved and not S2_PROFILE.violations()
    bad = LipschitzProfile((1.0, 1.5), (2.0, 2.5))
    assert not bad.interleaved
    assert "not above previous beta" in bad.violations()[0]


def test_s2_bounds(s2_solution):
    rep = endpoint_error_bounds(s2_solution, (0.01, 0.01), S2_PROFILE)
    assert rep.lower[0] == pytest.approx(0.01 / 0.99)
    assert rep.lower[0] == pytest.approx(0.01010, abs=1e-5)
    assert rep.lower_case == ["zero", "zero"]
    assert all(r is not None for r in rep.revenue)
    assert not rep.notes


def test_crossing_bound_formula(s2_solution):
    crossed = replace(s2_solution, lower=[("zero", -1), ("cross", 0)], upper=[("cross", 1), ("own", -1)])
    rep = endpoint_error_bounds(crossed, (0.01, 0.01), S2_PROFILE)
    assert rep.upper[0] == pytest.approx(0.02 / 0.98)
    assert rep.upper[0] == pytest.approx(0.02041, abs=1e-5)
    assert rep.lower[1] == pytest.approx(max(0.01 / 1.99, 0.02 / (1.99 - 1.01)))


def test_zero_epsilon_means_zero_bounds(s2_solution):
    rep = endpoint_error_bounds(s2_solution, 0.0, S2_PROFILE)
    assert rep.lower == [0.0, 0.0] and rep.upper == [0.0, 0.0] and rep.revenue == [0.0, 0.0]
    res = empirical_perturbation_test(s2_solution, 0.0, trials=3, grid_n=20_000)
    assert res.max_endpoint_deviation == 0.0 and res.max_revenue_deviation == 0.0
    assert res.satisfied


def test_unavailable_bound_when_profile_overlaps(s2_solution):
    crossed = replace(s2_solution, upper=[("cross", 1), ("own", -1)])
    rep = endpoint_error_bounds(crossed, 0.01, LipschitzProfile((1.0, 1.0), (1.0, 1.0)))
    assert rep.upper[0] is None and rep.revenue[0] is None and not rep.available(0)


@functools.lru_cache(maxsize=1)
def _s2_solution():
    return solve_chain(make_s2())


@given(
    st.floats(0.0, 0.05), st.floats(0.0, 0.05), st.floats(0.0, 0.05), st.floats(0.0, 0.05),
)
def test_bounds_monotone_in_epsilon(e1, e2, d1, d2):
    sol = _s2_solution()
    lo = endpoint_error_bounds(sol, (e1, e2), S2_PROFILE)
    hi = endpoint_error_bounds(sol, (e1 + d1, e2 + d2), S2_PROFILE)
    for a, b in zip(lo.lower + lo.upper + lo.revenue, hi.lower + hi.upper + hi.revenue):
        assert b >= a - 1e-15


def test_s2_empirical_offsets(s2_solution):
    res = empirical_perturbation_test(s2_solution, 0.01, trials=100, seed=0)
    assert res.satisfied
    assert len(res.rows) == 200
    assert all(row[-1] for row in res.rows)


def test_full_shift_is_tight(s2_solution):
    res = empirical_perturbation_test(s2_solution, 0.01, trials=1, seed=0)
    t, i, delta, d_lo, *_ = res.rows[0]
    assert (t, i, delta) == (0, 0, 0.01)
    assert d_lo == pytest.approx(0.01, abs=2 * res.spacing)
    assert d_lo / res.report.lower[0] >= 0.97


def test_slope_perturbation(s2_solution):
    res = empirical_perturbation_test(s2_solution, 0.01, trials=20, seed=1, grid_n=20_000, kind="slope")
    assert res.satisfied
    f = linear(2.0)
    g = perturbed(f, 0.01, "slope", 0.9)
    assert abs(g.accuracy_part(0.9) - f.accuracy_part(0.9)) == pytest.approx(0.01)
    assert perturbed(f, 0.01, "offset", 0.9)(0.3, 0.5) == pytest.approx(f(0.3, 0.5) + 0.01)


def test_empirical_argument_errors(s2_solution):
    with pytest.raises(ConfigurationError):
        empirical_perturbation_test(s2_solution, 0.01, kind="scale")
    with pytest.raises(ConfigurationError):
        empirical_perturbation_test(s2_solution, 0.01, trials=0)
    with pytest.raises(ConfigurationError):
        endpoint_error_bounds(s2_solution, (0.01,), S2_PROFILE)
    with pytest.raises(ConfigurationError):
        endpoint_error_bounds(s2_solution, (0.01, -0.01), S2_PROFILE)


def test_default_profile_s2(s2_solution):
    prof = profile_for(s2_solution)
    assert prof.alpha == pytest.approx((0.99, 1.98)) and prof.beta == pytest.approx((1.01, 2.02))
