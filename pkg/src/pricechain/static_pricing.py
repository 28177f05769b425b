"""Sequential static pricing of a data chain.

Models are priced in index order. When model ``i`` is priced, the prices of
models ``0..i-1`` are frozen and the envelope they induce is known. Each price
of the new model falls into exactly one market situation (it covers whole
upstream pieces, it competes with one piece, it starts where the envelope
ends, ...). :func:`enumerate_cases` partitions the price axis into those
situations, :func:`optimize_case` maximizes each situation's own revenue
expression, and :func:`price_next` keeps the case with the largest total
revenue of the chain prefix.
"""

from dataclasses import dataclass, field, replace
import itertools
import math

import numpy as np

from . import separable
from ._numeric import bisect, maximize
from .distributions import BuyerDistribution
from .exceptions import ConfigurationError
from .market import (
    CROSS,
    END,
    NONE,
    EnvelopeUtility,
    MarketAllocation,
    Piece,
    advance,
    allocate,
)
from .utility import UtilityFamily, check_axioms, term_inverse

CASE_ORDER = (
    "single",
    "full-coverage",
    "block-coverage",
    "competition",
    "no-competition-adjacent",
    "no-competition-gap",
)
_CODE = {k: c for c, k in enumerate(CASE_ORDER)}

# A marginal buyer this far past the envelope's end counts as a gap.
GAP_MARGIN = 1e-9
# Relative slack when comparing case totals.
CASE_TIE_TOL = 1e-12
SAME_PRICE_TOL = 1e-9


@dataclass(frozen=True)
class CostAccuracyCurve:
    """Training cost to model accuracy.

    ``kind="table"`` interpolates linearly between ``(cost, accuracy)`` points;
    ``kind="saturating"`` is ``a_max * (1 - exp(-rate * c))``.
    """

    kind: str = "table"
    costs: tuple = ()
    accuracies: tuple = ()
    a_max: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.kind == "table":
            c = np.asarray(self.costs, float)
            a = np.asarray(self.accuracies, float)
            if len(c) < 1 or len(c) != len(a):
                raise ConfigurationError("accuracy table needs matching non-empty cost and accuracy lists")
            if np.any(np.diff(c) <= 0) or np.any(np.diff(a) <= 0):
                raise ConfigurationError("accuracy table must be strictly increasing in both columns")
            object.__setattr__(self, "costs", tuple(c.tolist()))
            object.__setattr__(self, "accuracies", tuple(a.tolist()))
        elif self.kind == "saturating":
            if not (self.a_max > 0 and self.rate > 0):
                raise ConfigurationError("saturating curve needs a_max > 0 and rate > 0")
        else:
            raise ConfigurationError(f"unknown accuracy curve {self.kind!r}")

    def __call__(self, cost):
        c = float(cost)
        if self.kind == "saturating":
            if c < 0:
                raise ConfigurationError(f"cost {c} is negative")
            return self.a_max * (1.0 - math.exp(-self.rate * c))
        lo, hi = self.costs[0], self.costs[-1]
        if not lo - 1e-12 <= c <= hi + 1e-12:
            raise ConfigurationError(f"cost {c} outside the accuracy table [{lo}, {hi}]")
        return float(np.interp(c, self.costs, self.accuracies))

    def to_dict(self):
        if self.kind == "table":
            return {"type": "table", "points": [[c, a] for c, a in zip(self.costs, self.accuracies)]}
        return {"type": "saturating", "a_max": self.a_max, "rate": self.rate}


@dataclass(frozen=True)
class SolverSettings:
    case_grid: int = 2000
    price_tol: float = 1e-9
    root_tol: float = 1e-10
    oracle_grid: int = 100_000
    separable_candidates: bool = True
    stationary_scan: int = 500


@dataclass(frozen=True)
class Scenario:
    """A chain pricing problem with fixed costs.

    Accuracies are derived from ``costs`` through ``curve``; the family's
    ordering and monotonicity axioms are certified on construction when
    ``axiom_grid`` is positive.
    """

    costs: tuple
    family: UtilityFamily
    dist: BuyerDistribution
    curve: CostAccuracyCurve
    solver: SolverSettings = SolverSettings()
    cost_grid: tuple = None
    name: str = ""
    axiom_grid: int = 101
    accuracies: tuple = field(init=False)

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        object.__setattr__(self, "costs", costs)
        if len(costs) != len(self.family):
            raise ConfigurationError(
                f"{len(costs)} costs given for {len(self.family)} utility functions"
            )
        for i in range(1, len(costs)):
            if not costs[i] > costs[i - 1]:
                raise ConfigurationError(f"costs must be strictly increasing (model {i + 1})")
        acc = tuple(self.curve(c) for c in costs)
        lo, hi = self.family.accuracy_bounds
        for i, a in enumerate(acc):
            if not lo < a <= hi + 1e-12:
                raise ConfigurationError(f"model {i + 1}: accuracy {a} outside ({lo}, {hi}]")
            if i and not a > acc[i - 1]:
                raise ConfigurationError(f"model {i + 1}: accuracy not above model {i}")
        object.__setattr__(self, "accuracies", acc)
        if self.axiom_grid:
            report = check_axioms(self.family, self.axiom_grid, accuracies=acc)
            if not report.passed:
                i, j, p, _, a, why = report.violations[0]
                raise ConfigurationError(
                    f"utility axioms fail: {why} (models {i + 1},{j + 1} at p={p:.6g}, a={a:.6g})"
                )

    @property
    def n(self):
        return len(self.costs)

    @property
    def price_cap(self):
        return self.family.price_cap

    def with_costs(self, costs):
        return replace(self, costs=tuple(costs))


@dataclass(frozen=True)
class CaseDescriptor:
    """One market situation for the model being priced.

    ``ref`` is the 0-based index of the upstream model the situation refers
    to (the first covered piece, the piece competed with, or the piece whose
    end the new model starts at). ``lo``/``hi`` bound the prices at which the
    situation holds exactly.
    """

    kind: str
    lo: float
    hi: float
    ref: int = -1

    @property
    def label(self):
        if self.kind == "competition":
            return f"competition-with-{self.ref + 1}"
        return self.kind

    @property
    def order(self):
        return _CODE[self.kind]


@dataclass
class CaseResult:
    case: CaseDescriptor
    price: float
    objective: float
    total: float
    candidates: list = field(default_factory=list)
    nudged: bool = False


@dataclass
class StepRecord:
    model: int
    envelope: EnvelopeUtility
    upstream_total: float
    results: list
    chosen: CaseResult = None
    diagnostics: list = field(default_factory=list)


@dataclass
class ChainState:
    """Partial solution: models ``0..len(prices)-1`` are priced."""

    scenario: Scenario
    prices: list = field(default_factory=list)
    active: list = field(default_factory=list)
    pieces: list = field(default_factory=list)
    cases: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def priced(self):
        return len(self.prices)

    def envelope(self):
        return envelope_from_pieces(self.pieces)

    def total(self):
        return _pieces_revenue(self.pieces, self.scenario.dist)


@dataclass
class ChainSolution:
    scenario: Scenario
    prices: tuple
    active: tuple
    allocation: MarketAllocation
    lower: list
    upper: list
    revenues: tuple
    profits: tuple
    objective: float
    cases: tuple
    trace: list

    @property
    def total_revenue(self):
        return float(sum(self.revenues))

    @property
    def case_labels(self):
        return tuple("inactive" if c is None else c.label for c in self.cases)


def envelope_from_pieces(pieces):
    return EnvelopeUtility(
        tuple(Piece(lo, hi, j, pj, fj) for j, lo, hi, fj, pj, _, _ in pieces if hi > lo)
    )


def _pieces_revenue(pieces, dist):
    return float(sum(pj * dist.interval_mass(lo, hi) for _, lo, hi, _, pj, _, _ in pieces if hi > lo))


def _live(pieces):
    return [pc for pc in pieces if pc[2] > pc[1]]


# --- fast closed forms for the separable grammar ------------------------------


def _marginal(f, p, a_lo, A):
    """Lower edge of the buyers with non-negative utility in ``[a_lo, A]``.

    Returns NaN when nobody in the range has non-negative utility.
    """
    if np.ndim(p) == 0:
        p = float(p)
        if f(p, a_lo) >= 0:
            return a_lo
        if f(p, A) < 0:
            return math.nan
        x = f.accuracy_inverse(-f.price_part(p))
        if not (math.isfinite(x) and a_lo <= x <= A):
            x = bisect(lambda a: f(p, a), a_lo, A)
        return x
    p = np.asarray(p, float)
    lo_ok = f(p, a_lo) >= 0
    hi_ok = f(p, A) >= 0
    with np.errstate(invalid="ignore"):
        x = f.accuracy_inverse(-f.price_part(p))
    bad = ~np.isfinite(x) | (x < a_lo) | (x > A)
    need = bad & hi_ok & ~lo_ok
    if np.any(need):
        x = np.where(need, bisect(lambda a: f(p, a), a_lo + 0.0 * p, A + 0.0 * p), x)
    x = np.where(lo_ok, a_lo, x)
    return np.where(hi_ok, x, np.nan)


def _crossing(f, p, fj, pj, lo, hi):
    """Point in ``[lo, hi]`` where ``f(p, .)`` overtakes ``fj(pj, .)``, clipped."""
    def diff(a):
        return f(p, a) - fj(pj, a)

    same = f.accuracy_form == fj.accuracy_form and f.q == fj.q and f.theta > fj.theta
    if np.ndim(p) == 0:
        p = float(p)
        d_lo, d_hi = diff(lo), diff(hi)
        if d_lo >= 0:
            return lo
        if d_hi < 0:
            return hi
        if same:
            y = fj.price_part(pj) - f.price_part(p)
            x = term_inverse(f.accuracy_form, f.theta - fj.theta, f.q, y)
            if math.isfinite(x) and lo <= x <= hi:
                return x
        return bisect(diff, lo, hi)
    p = np.asarray(p, float)
    d_lo, d_hi = diff(lo), diff(hi)
    with np.errstate(invalid="ignore"):
        if same:
            y = fj.price_part(pj) - f.price_part(p)
            x = term_inverse(f.accuracy_form, f.theta - fj.theta, f.q, y)
        else:
            x = np.full(p.shape, np.nan)
    bad = ~np.isfinite(x) | (x < lo) | (x > hi)
    need = bad & (d_lo < 0) & (d_hi >= 0)
    if np.any(need):
        x = np.where(need, bisect(diff, lo + 0.0 * p, hi + 0.0 * p), x)
    x = np.where(d_hi < 0, hi, x)
    return np.where(d_lo >= 0, lo, x)


# --- case classification -------------------------------------------------------


def _classify(pieces, f, A, a_lo, p):
    """Integer case codes ``order * (n + 1) + ref + 1`` for prices ``p``; -1 = no sale."""
    step = advance(pieces, f, A, a_lo, p)
    live = _live(pieces)
    width = len(pieces) + 2
    kind = np.asarray(step.kind)
    ref = np.asarray(step.ref)
    x = np.asarray(step.x, float)
    if not live:
        code = np.where(kind == NONE, -1, _CODE["single"] * width)
        return code if code.ndim else int(code)
    end = max(pc[2] for pc in live)
    last = max(live, key=lambda pc: pc[2])[0]
    # First live piece starting at or above x, for full coverage.
    first = np.full(x.shape, -1)
    for pc in reversed(live):
        first = np.where(pc[1] >= x - 1e-12, pc[0], first)
    kinds = np.select(
        [
            kind == NONE,
            kind == CROSS,
            (kind == END) & (ref == last),
            kind == END,
            x > end + GAP_MARGIN,
            x >= end - GAP_MARGIN,
        ],
        [
            -1,
            _CODE["competition"],
            _CODE["no-competition-adjacent"],
            _CODE["block-coverage"],
            _CODE["no-competition-gap"],
            _CODE["no-competition-adjacent"],
        ],
        default=_CODE["full-coverage"],
    )
    refs = np.select(
        [kind == CROSS, kind == END, x > end + GAP_MARGIN, x >= end - GAP_MARGIN],
        [ref, ref, last, last],
        default=first,
    )
    code = np.where(kinds < 0, -1, kinds * width + refs + 1)
    return code if code.ndim else int(code)


def _decode(code, width):
    return CASE_ORDER[code // width], code % width - 1


def _label_change(pieces, f, A, a_lo, a, b, code, xtol):
    """Bisect to the first label change above ``a``; returns the final bracket."""
    while b - a > xtol * max(1.0, abs(b)):
        mid = 0.5 * (a + b)
        if _classify(pieces, f, A, a_lo, mid) == code:
            a = mid
        else:
            b = mid
    return a, b


def _segments(pieces, f, A, a_lo, grid, codes, xtol=1e-13, max_hidden=50):
    """``(start, code)`` runs of the label, with boundaries bisected to ``xtol``.

    A grid cell can hide a short run of a third label between its two end
    labels; after each boundary the label just past it is read back, and the
    search continues inside the cell until the right-hand label is reached.
    """
    out = [(0.0, int(codes[0]))]
    for k in np.flatnonzero(codes[1:] != codes[:-1]).tolist():
        a, b = float(grid[k]), float(grid[k + 1])
        left, target = int(codes[k]), int(codes[k + 1])
        for _ in range(max_hidden):
            lo, hi = _label_change(pieces, f, A, a_lo, a, b, left, xtol)
            code = _classify(pieces, f, A, a_lo, hi) if hi < b else target
            out.append((0.5 * (lo + hi), code))
            if code == target:
                break
            a, left = hi, code
    return out


def enumerate_cases(pieces, f, A, a_lo, price_cap, grid_n=2000):
    """Partition ``[0, price_cap]`` into the market situations of a new model.

    ``pieces`` is the current fold state (see :func:`pricechain.market.advance`).
    Boundaries between situations are located by bisection on the situation
    label itself, so each descriptor's interval is where that situation holds.
    """
    P = float(price_cap)
    width = len(pieces) + 2
    if P <= 0:
        code = _classify(pieces, f, A, a_lo, 0.0)
        if code < 0:
            return []
        kind, ref = _decode(code, width)
        return [CaseDescriptor(kind, 0.0, 0.0, ref)]
    grid = np.linspace(0.0, P, max(int(grid_n), 3))
    codes = _classify(pieces, f, A, a_lo, grid)
    segs = _segments(pieces, f, A, a_lo, grid, codes)
    out = []
    for r, (start, code) in enumerate(segs):
        if code < 0:
            continue
        end = segs[r + 1][0] if r + 1 < len(segs) else P
        kind, ref = _decode(code, width)
        out.append(CaseDescriptor(kind, start, end, ref))
    return out


# --- case objectives ------------------------------------------------------------


def _piece(pieces, j):
    for pc in pieces:
        if pc[0] == j:
            return pc
    raise KeyError(j)


def case_objective(case, pieces, f, A, a_lo, dist):
    """The situation's own revenue expression as a function of the new price.

    Competition keeps the competed piece's revenue up to the crossing; every
    other situation counts only the new model's revenue. Pieces below the
    situation's reference are untouched and excluded.
    """
    kind = case.kind
    if kind in ("single", "full-coverage", "no-competition-gap"):
        def obj(p):
            x = _marginal(f, p, a_lo, A)
            m = dist.interval_mass(x, A)
            if np.ndim(p) == 0:
                return p * m if math.isfinite(x) else 0.0
            return np.where(np.isfinite(x), p * np.nan_to_num(m), 0.0)
        return obj
    j, lo_j, hi_j, fj, pj, _, _ = _piece(pieces, case.ref)
    if kind in ("block-coverage", "no-competition-adjacent"):
        m = dist.interval_mass(hi_j, A)
        return lambda p: p * m
    if kind == "competition":
        def obj(p):
            a = _crossing(f, p, fj, pj, lo_j, hi_j)
            return pj * dist.interval_mass(lo_j, a) + p * dist.interval_mass(a, A)
        return obj
    raise ConfigurationError(f"unknown case {kind!r}")


def retained_upstream(case, pieces, dist):
    """Revenue of upstream pieces the situation leaves untouched."""
    live = _live(pieces)
    if case.kind == "single":
        return 0.0
    if case.kind == "no-competition-gap":
        keep = live
    elif case.kind in ("block-coverage", "no-competition-adjacent"):
        keep = [pc for pc in live if pc[0] <= case.ref]
    else:
        keep = [pc for pc in live if pc[0] < case.ref]
    return _pieces_revenue(keep, dist)


def exact_total(pieces, f, A, a_lo, p, dist):
    """Total chain-prefix revenue after adding the new model at price ``p``."""
    step = advance(pieces, f, A, a_lo, float(p))
    tot = _pieces_revenue(step.pieces[:-1], dist)
    if step.kind != NONE:
        tot += float(p) * dist.interval_mass(step.x, A)
    return tot


def separable_candidates(case, pieces, f, A, a_lo, dist, n_scan=500):
    """Stationary points and density kinks of a situation's objective."""
    lo, hi = case.lo, case.hi
    parts = separable.SeparableParts(f)
    kinks = []
    stationary = []
    if case.kind in ("single", "full-coverage", "no-competition-gap"):
        stationary = separable.stationary_single(parts, A, dist, (lo, hi), n_scan, case.kind)
        for t in tuple(dist.breakpoints()) + (a_lo,):
            if a_lo <= t <= A:
                kinks.append(separable.price_for_marginal(parts, t))
    else:
        j, lo_j, hi_j, fj, pj, _, _ = _piece(pieces, case.ref)
        if case.kind in ("block-coverage", "no-competition-adjacent"):
            kinks.append(separable.price_for_marginal(parts, hi_j))
        elif case.kind == "competition":
            pj_parts = separable.SeparableParts(fj)
            try:
                stationary = separable.stationary_competition(
                    parts, pj_parts, pj, A, dist, (lo, hi), (lo_j, hi_j), n_scan
                )
            except ConfigurationError:
                stationary = []
            for t in dist.breakpoints():
                if lo_j < t < hi_j:
                    kinks.append(separable.price_for_crossing(parts, pj_parts, pj, t))
    prices = [c.price for c in stationary] + [k for k in kinks if k is not None]
    return stationary, sorted(p for p in prices if lo <= p <= hi)


def optimize_case(case, pieces, f, A, a_lo, dist, settings=SolverSettings(), use_candidates=None):
    """Maximize one situation's objective over the closure of its interval.

    Returns a :class:`CaseResult` whose ``total`` is the exact chain-prefix
    revenue at the returned price. If the closure endpoint belongs to a
    neighbouring situation and the two disagree, the price is moved just
    inside the situation's interval.
    """
    if use_candidates is None:
        use_candidates = settings.separable_candidates
    obj = case_objective(case, pieces, f, A, a_lo, dist)
    stationary, cands = [], []
    if use_candidates:
        stationary, cands = separable_candidates(
            case, pieces, f, A, a_lo, dist, settings.stationary_scan
        )
    lo, hi = case.lo, _edge_price(case, pieces, f)
    p, val = maximize(obj, lo, hi, settings.case_grid, settings.price_tol, [c for c in cands if c <= hi])
    base = retained_upstream(case, pieces, dist)
    total = exact_total(pieces, f, A, a_lo, p, dist)
    nudged = False
    if abs(total - (base + val)) > 1e-9 * max(1.0, abs(total)) and case.hi > case.lo:
        q = _nudge(case, pieces, f, A, a_lo, p)
        if q is not None:
            p, val = q, float(obj(q))
            total = exact_total(pieces, f, A, a_lo, p, dist)
            nudged = True
    return CaseResult(case, float(p), float(val), float(total), stationary, nudged)


def _edge_price(case, pieces, f):
    """Upper price of a situation whose new model starts at an upstream end.

    The label tolerates a marginal buyer up to ``GAP_MARGIN`` past the end,
    but the situation's objective is only exact up to the price at which
    the marginal buyer reaches it.
    """
    if case.kind not in ("block-coverage", "no-competition-adjacent"):
        return case.hi
    edge = separable.price_for_marginal(separable.SeparableParts(f), _piece(pieces, case.ref)[2])
    if edge is not None and case.lo <= edge < case.hi:
        return edge
    return case.hi


def _nudge(case, pieces, f, A, a_lo, p):
    width = len(pieces) + 2
    want = _CODE[case.kind] * width + case.ref + 1
    mid = 0.5 * (case.lo + case.hi)
    step = 1e-12 * max(1.0, abs(p))
    while step < 0.5 * (case.hi - case.lo):
        q = p + step if p < mid else p - step
        if _classify(pieces, f, A, a_lo, q) == want:
            return q
        step *= 4.0
    return None


# --- chain steps ------------------------------------------------------------------


def new_state(scn):
    return ChainState(scn)


def price_next(state):
    """Price the next unpriced model of ``state`` in place and return it."""
    scn = state.scenario
    k = state.priced
    if k >= scn.n:
        raise ConfigurationError("every model is already priced")
    f = scn.family.members[k]
    A = scn.accuracies[k]
    a_lo = scn.family.accuracy_bounds[0]
    dist = scn.dist
    settings = scn.solver
    pieces = state.pieces
    upstream = state.total()
    record = StepRecord(k, state.envelope(), upstream, [])
    cases = enumerate_cases(pieces, f, A, a_lo, scn.price_cap, settings.case_grid)
    best = None
    for cd in cases:
        res = optimize_case(cd, pieces, f, A, a_lo, dist, settings)
        record.results.append(res)
        if res.case.kind == "competition":
            x = _marginal(f, res.price, a_lo, A)
            a_star = advance(pieces, f, A, a_lo, res.price).x
            if math.isfinite(x) and x > a_star + 1e-9:
                record.diagnostics.append(
                    f"model {k + 1}: marginal buyer {x:.6g} above crossing {a_star:.6g}"
                )
        if best is None or _better(res, best):
            best = res
    if best is None or not best.total > upstream + CASE_TIE_TOL * max(1.0, upstream):
        p = best.price if best is not None else 0.0
        state.prices.append(p)
        state.active.append(False)
        state.cases.append(None)
        state.pieces = list(pieces) + [(k, A, A, f, p, 0, -1)]
        record.chosen = None
        state.trace.append(record)
        return state
    step = advance(pieces, f, A, a_lo, best.price)
    new = []
    for j, lo, hi, fj, pj, uk, ur in step.pieces:
        new.append((k if j is None else j, lo, hi, fj, pj, uk, k if ur == -2 else ur))
    state.pieces = new
    state.prices.append(best.price)
    state.active.append(True)
    state.cases.append(best.case)
    record.chosen = best
    state.trace.append(record)
    return state


def _better(res, best):
    tol = CASE_TIE_TOL * max(1.0, abs(res.total), abs(best.total))
    if res.total > best.total + tol:
        return True
    if res.total < best.total - tol:
        return False
    # Prices this close sit on one situation boundary, located by bisection.
    if abs(res.price - best.price) > SAME_PRICE_TOL * max(1.0, abs(best.price)):
        return res.price > best.price
    return res.case.order < best.case.order


def finish(state):
    """Turn a fully priced state into a :class:`ChainSolution`."""
    scn = state.scenario
    alloc = allocate(state.prices, scn.family, scn.accuracies, state.active)
    revenues = []
    for i, iv in enumerate(alloc.allocation.intervals):
        if iv is None or not state.active[i]:
            revenues.append(0.0)
        else:
            revenues.append(state.prices[i] * scn.dist.interval_mass(iv[0], iv[1]))
    profits = tuple(max(r - c, 0.0) for r, c in zip(revenues, scn.costs))
    return ChainSolution(
        scenario=scn,
        prices=tuple(state.prices),
        active=tuple(state.active),
        allocation=alloc.allocation,
        lower=alloc.lower,
        upper=alloc.upper,
        revenues=tuple(revenues),
        profits=profits,
        objective=float(sum(profits)),
        cases=tuple(state.cases),
        trace=state.trace,
    )


def price_single(scn):
    """Monopoly price of the first model: ``(price, allocation, revenue)``."""
    state = price_next(new_state(scn))
    alloc = allocate(state.prices, scn.family, scn.accuracies[:1], state.active)
    iv = alloc.allocation.intervals[0]
    r = 0.0 if iv is None else state.prices[0] * scn.dist.interval_mass(*iv)
    return state.prices[0], alloc.allocation, r


def solve_chain(scn):
    state = new_state(scn)
    for _ in range(scn.n):
        price_next(state)
    return finish(state)


@dataclass
class SweepResult:
    best: ChainSolution
    evaluated: list


def optimize_costs(scn, cost_grid=None):
    """Brute-force search over strictly increasing cost tuples from a grid.

    Ties in the objective go to the lexicographically smallest cost tuple.
    """
    grid = scn.cost_grid if cost_grid is None else cost_grid
    if not grid:
        raise ConfigurationError("cost grid is empty")
    grid = sorted(set(float(c) for c in grid))
    best = None
    evaluated = []
    for costs in itertools.combinations(grid, scn.n):
        sol = solve_chain(scn.with_costs(costs))
        evaluated.append((costs, sol.objective))
        if best is None or sol.objective > best.objective + 1e-12 * max(1.0, abs(best.objective)):
            best = sol
    if best is None:
        raise ConfigurationError(f"cost grid has fewer than {scn.n} distinct values")
    return SweepResult(best, evaluated)


@dataclass
class RevenueCurve:
    prices: np.ndarray
    revenues: np.ndarray

    @property
    def max_jump(self):
        if len(self.revenues) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.revenues))))


def state_before(scn, k):
    """Static state with models ``0..k-1`` priced."""
    state = new_state(scn)
    for _ in range(k):
        price_next(state)
    return state


def revenue_curve(state, price_grid):
    """Own revenue of the next model at each grid price, upstream prices frozen."""
    scn = state.scenario
    k = state.priced
    f = scn.family.members[k]
    A = scn.accuracies[k]
    a_lo = scn.family.accuracy_bounds[0]
    grid = np.atleast_1d(np.asarray(price_grid, float))
    step = advance(state.pieces, f, A, a_lo, grid)
    x = np.asarray(step.x, float)
    sells = np.asarray(step.kind) != NONE
    r = np.where(sells, grid * scn.dist.interval_mass(x, A), 0.0)
    return RevenueCurve(grid, r)
