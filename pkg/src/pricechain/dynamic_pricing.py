"""Best responses and chain equilibria for the dynamic strategy.

Every model maximizes only its own revenue while the others hold their
prices. The revenue of model ``i`` at price ``p`` is computed exactly from
the buyer rule against all other models, so the compete/no-compete branches
of the two-neighbour analysis are only used as warm starts and as a
cross-check.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from . import separable
from ._numeric import maximize
from .market import allocate, allocate_curve
from .exceptions import ConfigurationError

log = logging.getLogger(__name__)

BR_TIE_TOL = 1e-9


@dataclass
class BestResponseResult:
    price: float
    branch: tuple
    revenue: float
    curve: tuple
    branch_candidates: list = field(default_factory=list)
    disagreement: float = 0.0
    non_adjacent: bool = False


@dataclass
class EquilibriumResult:
    prices: tuple
    iterations: int
    gaps: tuple
    trace: list
    damped: bool = False

    @property
    def converged(self):
        return self.prices is not None


def own_revenue(i, p, prices, scn):
    """Revenue of model ``i`` at price(s) ``p`` with the other prices fixed."""
    grid = np.atleast_1d(np.asarray(p, float))
    ends = allocate_curve(i, grid, prices, scn.family, scn.accuracies, [True] * scn.n)
    lo, hi = ends[i]
    r = grid * scn.dist.interval_mass(lo, hi)
    return float(r[0]) if np.ndim(p) == 0 else r


def _branch_candidates(i, prices, scn):
    """Stationary points of the compete and no-compete branches on the left."""
    fam, acc, dist = scn.family, scn.accuracies, scn.dist
    P = scn.price_cap
    parts = separable.SeparableParts(fam.members[i])
    out = [c.price for c in separable.stationary_single(parts, acc[i], dist, (0.0, P))]
    if i > 0:
        left = separable.SeparableParts(fam.members[i - 1])
        a_lo = fam.accuracy_bounds[0]
        try:
            out += [
                c.price
                for c in separable.stationary_competition(
                    parts, left, prices[i - 1], acc[i], dist, (0.0, P), (a_lo, acc[i - 1])
                )
            ]
        except ConfigurationError:
            pass
        edge = separable.price_for_marginal(parts, acc[i - 1])
        if edge is not None and 0.0 <= edge <= P:
            out.append(edge)
    return sorted(set(out))


def _branch(i, price, prices, scn):
    trial = list(prices)
    trial[i] = price
    al = allocate(trial, scn.family, scn.accuracies, [True] * scn.n)
    lower, upper = al.lower[i], al.upper[i]
    left = "compete-left" if lower is not None and lower[0] == "cross" else "no-compete-left"
    right = "compete-right" if upper is not None and upper[0] == "cross" else "no-compete-right"
    refs = [t[1] for t in (lower, upper) if t is not None and t[0] in ("cross", "end")]
    non_adjacent = any(abs(r - i) > 1 for r in refs)
    return (left, right), non_adjacent


def best_response(i, prices, scn, n_grid=None, tol=None):
    """Revenue-maximizing price of model ``i`` against fixed ``prices``.

    Maximizers whose revenues agree within ``BR_TIE_TOL`` resolve to the
    largest price.
    """
    n_grid = scn.solver.case_grid if n_grid is None else n_grid
    tol = scn.solver.price_tol if tol is None else tol
    prices = [float(p) for p in prices]
    P = scn.price_cap

    def rev(p):
        return own_revenue(i, p, prices, scn)

    cands = _branch_candidates(i, prices, scn)
    grid = np.linspace(0.0, P, max(n_grid, 3))
    curve = rev(grid)
    p, r = maximize(rev, 0.0, P, n_grid, tol, cands, tie_tol=BR_TIE_TOL)
    # Revenues within tolerance of the best count as ties; take the largest price.
    close = grid[curve >= r - BR_TIE_TOL * max(1.0, abs(r))]
    if len(close) and close[-1] > p:
        top = float(close[-1])
        p, r = top, rev(top)
    branch_best = max((rev(c) for c in cands), default=0.0)
    gap = r - branch_best
    if gap > 1e-9:
        log.debug("model %d: branch candidates fall %.3g short of the exact best response", i + 1, gap)
    branch, non_adjacent = _branch(i, p, prices, scn)
    return BestResponseResult(float(p), branch, float(r), (grid, curve), cands, float(gap), non_adjacent)


def verify_equilibrium(prices, scn, tol=1e-6, n_grid=None):
    """``(ok, gaps)`` where ``gaps[i] = max_p r_i(p) - r_i(prices[i])``."""
    gaps = []
    for i in range(scn.n):
        br = best_response(i, prices, scn, n_grid)
        gaps.append(max(br.revenue - own_revenue(i, float(prices[i]), prices, scn), 0.0))
    return all(g <= tol for g in gaps), tuple(gaps)


def find_equilibrium(scn, init=None, max_iter=200, tol=1e-6, verify_tol=1e-6, damping=0.5):
    """Synchronous iterated best response from ``init``.

    A period-2 cycle switches on damping. Returns an :class:`EquilibriumResult`
    whose ``prices`` is None when the iteration did not settle or the fixed
    point fails verification.
    """
    if max_iter < 1 or not tol > 0:
        raise ConfigurationError("max_iter must be >= 1 and tol > 0")
    n = scn.n
    cur = [0.5 * scn.price_cap] * n if init is None else [float(p) for p in init]
    if len(cur) != n:
        raise ConfigurationError(f"init has {len(cur)} prices for {n} models")
    trace = [tuple(cur)]
    prev = None
    damped = False
    for it in range(1, max_iter + 1):
        br = [best_response(i, cur, scn).price for i in range(n)]
        if prev is not None and not damped:
            cycle = max(abs(b - q) for b, q in zip(br, prev)) < tol
            moving = max(abs(b - c) for b, c in zip(br, cur)) >= tol
            if cycle and moving:
                damped = True
        nxt = [c + damping * (b - c) for b, c in zip(br, cur)] if damped else br
        step = max(abs(a - b) for a, b in zip(nxt, cur))
        prev, cur = cur, nxt
        trace.append(tuple(cur))
        if step < tol:
            ok, gaps = verify_equilibrium(cur, scn, verify_tol)
            return EquilibriumResult(tuple(cur) if ok else None, it, gaps, trace, damped)
    _, gaps = verify_equilibrium(cur, scn, verify_tol)
    return EquilibriumResult(None, max_iter, gaps, trace, damped)
