import numpy as np
import pytest

from pricechain.dynamic_pricing import best_response, find_equilibrium, own_revenue, verify_equilibrium
from pricechain.exceptions import ConfigurationError
from pricechain.market import oracle_allocate
from pricechain.static_pricing import price_single

from oracles import own_revenue_curve


def test_best_response_second_model(s2):
    br = best_response(1, [0.3, 0.1], s2)
    assert br.price == pytest.approx(1.2, abs=1e-9)
    assert br.revenue == pytest.approx(0.36, abs=1e-9)
    assert br.branch == ("no-compete-left", "no-compete-right")
    assert not br.non_adjacent


def test_best_response_first_model(s2):
    br = best_response(0, [0.3, 1.2], s2)
    assert br.price == pytest.approx(0.3, abs=1e-9)
    assert br.revenue == pytest.approx(0.09, abs=1e-9)


def test_best_response_revenue_matches_oracle(s2):
    for i, prices in ((1, [0.3, 0.1]), (0, [0.5, 0.8]), (1, [0.2, 0.2])):
        br = best_response(i, prices, s2)
        trial = list(prices)
        trial[i] = br.price
        orc = oracle_allocate(trial, s2.family, s2.accuracies, s2.dist, 1_000_000)
        assert br.revenue == pytest.approx(orc.revenues[i], abs=1e-6)


def test_own_revenue_curve_matches_grid_oracle(s2):
    grid = np.linspace(0.0, 1.2, 61)
    exact = own_revenue(1, grid, [0.3, 0.0], s2)
    ref = own_revenue_curve(1, s2.family.members, [0.3, 0.0], s2.accuracies, s2.dist.pdf,
                            (0.05, 1.0), grid, buyer_n=100_000)
    assert exact == pytest.approx(ref, abs=1e-4)


def test_equilibrium_s2(s2):
    res = find_equilibrium(s2, (0.1, 0.1), 200, 1e-6)
    assert res.converged
    assert res.prices == pytest.approx((0.3, 1.2), abs=1e-9)
    assert all(g <= 1e-6 for g in res.gaps)
    assert res.trace[0] == (0.1, 0.1)
    again = find_equilibrium(s2, (0.1, 0.1), 200, 1e-6)
    assert again.trace == res.trace


def test_verify_equilibrium_s2(s2):
    ok, gaps = verify_equilibrium((0.3, 1.2), s2, 1e-4)
    assert ok
    ok, gaps = verify_equilibrium((0.3, 0.75), s2, 1e-4)
    assert not ok
    assert gaps[1] == pytest.approx(0.0225, abs=1e-3)
    ok, _ = verify_equilibrium((0.0, 0.0), s2, 1e-4)
    assert not ok


def test_single_model_matches_static(s2_single):
    res = find_equilibrium(s2_single, (0.9,), 50, 1e-6)
    p, _, _ = price_single(s2_single)
    assert res.prices[0] == pytest.approx(p, abs=1e-9)
    assert res.iterations <= 2


def test_non_convergence_reports_gaps(s2):
    res = find_equilibrium(s2, (1.2, 0.0), 1, 1e-6)
    assert res.prices is None and not res.converged
    assert len(res.gaps) == 2 and max(res.gaps) > 0


def test_bad_arguments(s2):
    with pytest.raises(ConfigurationError):
        find_equilibrium(s2, (0.1,), 10, 1e-6)
    with pytest.raises(ConfigurationError):
        find_equilibrium(s2, (0.1, 0.1), 0, 1e-6)


def test_visited_prices_give_connected_markets(s2):
    res = find_equilibrium(s2, (0.9, 0.2), 200, 1e-6)
    for prices in res.trace:
        orc = oracle_allocate(prices, s2.family, s2.accuracies, s2.dist, 20_000)
        assert orc.connected() and orc.ordered()
