"""Randomized invariants over small generated inputs."""

import numpy as np
from hypothesis import assume, given, strategies as st

from pricechain.distributions import PiecewiseLinear, Uniform
from pricechain.io import solution_csv
from pricechain.market import allocate, mass, oracle_allocate
from pricechain.separable import SeparableParts, marginal_buyer
from pricechain.static_pricing import CostAccuracyCurve, Scenario, solve_chain
from pricechain.utility import UtilityFamily, UtilityFunction, zero_accuracy

forms = st.sampled_from(["linear", "power", "log"])
price_forms = st.sampled_from(["linear", "quadratic", "log"])
coef = st.floats(0.3, 3.0)


@st.composite
def utilities(draw):
    return UtilityFunction(draw(forms), draw(coef), draw(price_forms), draw(coef), 0.0, draw(st.floats(0.5, 2.0)))


@st.composite
def linear_families(draw):
    n = draw(st.integers(1, 4))
    steps = draw(st.lists(st.floats(0.1, 1.5), min_size=n, max_size=n))
    thetas = np.cumsum([0.5] + steps[1:]) if n > 1 else [0.5 + steps[0]]
    acc = np.sort(draw(st.lists(st.floats(0.1, 1.0), min_size=n, max_size=n, unique=True)))
    assume(np.all(np.diff(acc) > 1e-3))
    phi = draw(st.floats(0.5, 2.0))
    members = tuple(UtilityFunction("linear", float(t), "linear", phi) for t in thetas)
    return UtilityFamily(members, (0.0, 1.0), 2.0), tuple(float(a) for a in acc)


@given(utilities(), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_zero_accuracy_increases_with_price(f, p1, p2):
    lo, hi = sorted((p1, p2))
    a_lo = zero_accuracy(f, lo, (0.0, 1.0))
    a_hi = zero_accuracy(f, hi, (0.0, 1.0))
    assume(a_lo is not None and a_hi is not None)
    assert a_hi >= a_lo - 1e-9


@given(utilities(), st.floats(0.01, 2.0), st.floats(0.001, 1.0))
def test_marginal_buyer_increases_with_price(f, p, dp):
    parts = SeparableParts(f)
    a = marginal_buyer(parts, p)
    b = marginal_buyer(parts, p + dp)
    assume(a is not None and b is not None)
    assert b > a


@given(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5), st.floats(-0.5, 1.5))
def test_mass_additive_and_clamped(x, y, z):
    lo, mid, hi = sorted((x, y, z))
    d = PiecewiseLinear(((0.0, 1.0), (0.4, 2.5), (1.0, 0.5)), mass=1.7)
    total = mass(d, lo, hi)
    assert abs(total - (mass(d, lo, mid) + mass(d, mid, hi))) <= 1e-12
    assert 0.0 <= total <= 1.7 + 1e-12


@given(linear_families(), st.data())
def test_markets_connected_at_any_prices(fam_acc, data):
    fam, acc = fam_acc
    prices = data.draw(st.lists(st.floats(0.0, 2.0), min_size=len(acc), max_size=len(acc)))
    d = Uniform(0.0, 1.0)
    orc = oracle_allocate(prices, fam, acc, d, 5_000)
    assert orc.connected() and orc.ordered()
    al = allocate(prices, fam, acc)
    h = orc.spacing
    for i, iv in enumerate(al.allocation.intervals):
        e = orc.edges(i)
        if iv is None or iv[1] - iv[0] < 3 * h:
            continue
        assert e is not None
        assert abs(e[0] - iv[0]) <= 2 * h and abs(e[1] - iv[1]) <= 2 * h


@given(linear_families())
def test_solution_csv_is_deterministic(fam_acc):
    fam, acc = fam_acc
    n = len(acc)
    costs = tuple(0.01 * (k + 1) for k in range(n))
    curve = CostAccuracyCurve("table", costs, acc) if n > 1 else CostAccuracyCurve("table", (0.0, 1.0), (0.0, 1.0))
    if n == 1:
        costs = (acc[0],)
    scn = Scenario(costs, fam, Uniform(0.0, 1.0), curve, axiom_grid=0)
    first = solve_chain(scn)
    assert solution_csv(first) == solution_csv(solve_chain(scn))
    assert first.objective >= 0.0
