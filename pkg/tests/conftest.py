import os
import time

import pytest
from hypothesis import HealthCheck, settings

from pricechain.distributions import Uniform
from pricechain.oracle_suite import ScenarioGenerator
from pricechain.static_pricing import CostAccuracyCurve, Scenario, solve_chain
from pricechain.utility import UtilityFamily, UtilityFunction

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
S2_PATH = os.path.join(FIXTURES, "s2.json")

#: Seed and size of the generated batch shared by the structural acceptance checks.
SUITE_SEED = 0
SUITE_SIZE = 200


def linear(theta, **kw):
    return UtilityFunction("linear", theta, "linear", 1.0, **kw)


def make_s2(n=2):
    thetas = (1.0, 2.0)[:n]
    fam = UtilityFamily(tuple(linear(t) for t in thetas), (0.05, 1.0), 1.2)
    costs = (0.05, 0.1)[:n]
    curve = CostAccuracyCurve("table", (0.05, 0.1), (0.6, 0.9))
    return Scenario(costs, fam, Uniform(0.05, 1.0, 0.95), curve, name="S2" if n == 2 else "S2-single")


@pytest.fixture(scope="session")
def s2():
    return make_s2()


@pytest.fixture(scope="session")
def s2_single():
    return make_s2(1)


@pytest.fixture(scope="session")
def s2_solution(s2):
    return solve_chain(s2)


@pytest.fixture(scope="session")
def suite():
    """The seed-pinned generated batch, solved once per session."""
    t0 = time.perf_counter()
    scns = ScenarioGenerator(SUITE_SEED).generate(SUITE_SIZE)
    sols = [solve_chain(s) for s in scns]
    return {"scenarios": scns, "solutions": sols, "seconds": time.perf_counter() - t0}


def make_block_instance():
    """Three linear models where the third takes over the whole second block.

    Model 2 sits exactly at model 1's top accuracy, so the third model starts
    there too and its best price puts the marginal buyer on that edge.
    """
    fam = UtilityFamily(tuple(linear(t) for t in (1.0, 2.0, 3.0)), (0.05, 1.0), 2.0)
    curve = CostAccuracyCurve("table", (0.05, 0.1, 0.15), (0.6, 0.9, 1.0))
    return Scenario((0.05, 0.1, 0.15), fam, Uniform(0.05, 1.0, 0.95), curve, name="block")
