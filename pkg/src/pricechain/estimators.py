"""Estimator-style wrappers around the solvers.

``fit`` takes a scenario instead of a design matrix and stores the solved
prices and allocations as fitted attributes; ``predict`` maps buyer
accuracies (or buyer max prices) to the model each buyer purchases, with
0 meaning no purchase and ``k`` meaning model ``k``.
"""

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_accuracy_array, check_positive_int
from .dual_pricing import _choice, solve_chain_dual, solve_chain_qd
from .dynamic_pricing import find_equilibrium
from .market import allocate
from .static_pricing import solve_chain


def _pick_from_intervals(intervals, a):
    out = np.zeros(a.shape, dtype=int)
    for i, iv in enumerate(intervals):
        if iv is not None:
            out = np.where((a > iv[0]) & (a <= iv[1]), i + 1, out)
    return out


class StaticChainPricer(BaseEstimator):
    """Sequential static pricing.

    Parameters
    ----------
    separable_candidates : bool
        Add stationary points of the separable form to each case search.
    case_grid : int or None
        Grid size per case interval; None keeps the scenario's setting.
    """

    def __init__(self, separable_candidates=True, case_grid=None):
        self.separable_candidates = separable_candidates
        self.case_grid = case_grid

    def _prepare(self, scenario):
        solver = scenario.solver
        if self.case_grid is not None:
            solver = replace(solver, case_grid=check_positive_int(self.case_grid, "case_grid", 3))
        solver = replace(solver, separable_candidates=bool(self.separable_candidates))
        return replace(scenario, solver=solver)

    def fit(self, scenario, y=None):
        scn = self._prepare(scenario)
        sol = solve_chain(scn)
        self.solution_ = sol
        self.prices_ = np.array(sol.prices, float)
        self.intervals_ = sol.allocation.intervals
        self.revenues_ = np.array(sol.revenues, float)
        self.profits_ = np.array(sol.profits, float)
        self.objective_ = sol.objective
        self.cases_ = sol.case_labels
        self.accuracy_bounds_ = scn.family.accuracy_bounds
        return self

    def predict(self, buyer_accuracies):
        check_is_fitted(self, "prices_")
        a = check_accuracy_array(buyer_accuracies)
        return _pick_from_intervals(self.intervals_, a)

    def score(self, scenario=None, y=None):
        check_is_fitted(self, "objective_")
        return self.objective_


class DualPricer(BaseEstimator):
    """Dual formulation solved by role interchange."""

    def __init__(self):
        pass

    def fit(self, scenario, y=None):
        sol = solve_chain_dual(scenario)
        self.solution_ = sol
        self.decisions_ = np.array(sol.decisions, float)
        self.intervals_ = sol.buyer_intervals
        self.objective_ = sol.objective
        return self

    def predict(self, buyer_max_prices):
        check_is_fitted(self, "decisions_")
        return _pick_from_intervals(self.intervals_, check_accuracy_array(buyer_max_prices))

    def score(self, scenario=None, y=None):
        check_is_fitted(self, "objective_")
        return self.objective_


class QuasiDualPricer(BaseEstimator):
    def __init__(self):
        pass

    def fit(self, scenario, y=None):
        sol = solve_chain_qd(scenario)
        self.solution_ = sol
        self.family_ = scenario.family
        self.prices_ = np.array(sol.prices, float)
        self.active_ = sol.active
        self.objective_ = sol.objective
        return self

    def predict(self, buyer_max_prices):
        check_is_fitted(self, "prices_")
        q = check_accuracy_array(buyer_max_prices)
        return _choice(self.prices_.tolist(), self.family_, list(self.active_), q) + 1

    def score(self, scenario=None, y=None):
        check_is_fitted(self, "objective_")
        return self.objective_


class NashPricer(BaseEstimator):
    """Iterated best response; ``prices_`` is None when no equilibrium was found."""

    def __init__(self, init=None, max_iter=200, tol=1e-6):
        self.init = init
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, scenario, y=None):
        res = find_equilibrium(scenario, self.init, check_positive_int(self.max_iter, "max_iter"), self.tol)
        self.result_ = res
        self.converged_ = res.converged
        self.prices_ = None if res.prices is None else np.array(res.prices, float)
        self.gaps_ = np.array(res.gaps, float)
        self.n_iter_ = res.iterations
        self._scenario = scenario
        return self

    def predict(self, buyer_accuracies):
        check_is_fitted(self, "n_iter_")
        if self.prices_ is None:
            raise ValueError("no equilibrium was found; nothing to predict")
        scn = self._scenario
        al = allocate(self.prices_.tolist(), scn.family, scn.accuracies, [True] * scn.n)
        return _pick_from_intervals(al.allocation.intervals, check_accuracy_array(buyer_accuracies))

    def score(self, scenario=None, y=None):
        check_is_fitted(self, "n_iter_")
        return -float(np.max(self.gaps_)) if len(self.gaps_) else 0.0
