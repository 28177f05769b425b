"""Pricing over buyers distributed by their maximum acceptable price.

Quasi-dual: the seller still sets one price per model, but each buyer is
characterised by the most they are willing to pay, ``pbar``. A buyer can take
model ``i`` only if ``p_i <= pbar`` and ``b_i(p_i, pbar) >= 0``; among those
they pick the highest utility, ties going to the higher index.

Dual: the roles of the decision variable and the buyer type are exchanged.
This is solved by transposing the instance into the primal engine.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._numeric import bisect, maximize
from .distributions import BuyerDistribution
from .exceptions import ConfigurationError, DomainError
from .static_pricing import CostAccuracyCurve, Scenario, SolverSettings, solve_chain
from .utility import (
    ORDER_MARGIN,
    CompatibilityReport,
    UtilityFamily,
    UtilityFunction,
    sign_pattern_violations,
    term_derivative,
    term_value,
)

BUYER_FORMS = ("linear", "quadratic", "power", "log")
QD_CASES = ("single", "coverage", "competition", "no-competition-adjacent", "no-competition")


@dataclass(frozen=True)
class QuasiDualUtility:
    """``sum(coef * g(pbar)) - phi * price_form(p) + offset``.

    ``buyer_terms`` holds ``(form, coef, q)`` triples; coefficients may have
    either sign, so the utility need not be monotone in ``pbar``.
    """

    buyer_terms: tuple = (("linear", 1.0, 1.0),)
    price_form: str = "linear"
    phi: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        terms = []
        for t in self.buyer_terms:
            form, coef = t[0], float(t[1])
            q = float(t[2]) if len(t) > 2 else 1.0
            if form not in BUYER_FORMS:
                raise ConfigurationError(f"unknown buyer-price form {form!r}")
            terms.append((form, coef, q))
        object.__setattr__(self, "buyer_terms", tuple(terms))
        if not self.phi > 0:
            raise ConfigurationError("phi must be positive")
        UtilityFunction(price_form=self.price_form)  # validates the form name

    def buyer_part(self, pbar):
        return sum(term_value(f, c, q, pbar) for f, c, q in self.buyer_terms)

    def price_part(self, p):
        return -term_value(self.price_form, self.phi, 1.0, p) + self.offset

    def __call__(self, p, pbar):
        return self.buyer_part(pbar) + self.price_part(p)

    def d_buyer(self, pbar):
        return sum(term_derivative(f, c, q, pbar) for f, c, q in self.buyer_terms)

    def to_dict(self):
        return {
            "buyer_terms": [list(t) for t in self.buyer_terms],
            "price_form": self.price_form,
            "phi": self.phi,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(tuple(t) for t in d.get("buyer_terms", [("linear", 1.0, 1.0)])),
            d.get("price_form", "linear"),
            float(d.get("phi", 1.0)),
            float(d.get("offset", 0.0)),
        )


@dataclass(frozen=True)
class QuasiDualFamily:
    members: tuple
    buyer_bounds: tuple = (0.0, 1.0)
    price_cap: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ConfigurationError("a family needs at least one member")
        lo, hi = self.buyer_bounds
        if not lo < hi:
            raise ConfigurationError("buyer price bounds must satisfy lo < hi")
        if self.price_cap < 0:
            raise ConfigurationError("price cap must be non-negative")

    def __len__(self):
        return len(self.members)


def check_qd_axioms(fam, grid_n=101):
    """Decreasing in price, and ``b_i < b_j`` for ``i < j`` where ``p < pbar``."""
    ps = np.linspace(0.0, fam.price_cap, grid_n)
    qs = np.linspace(fam.buyer_bounds[0], fam.buyer_bounds[1], grid_n)
    P, Q = ps[:, None], qs[None, :]
    report = CompatibilityReport()
    vals = [f(P, Q) for f in fam.members]
    for i, v in enumerate(vals):
        bad = np.argwhere(~(np.diff(v, axis=0) < 0))
        for r, c in bad[:1]:
            report.add(i, i, ps[r], ps[r + 1], qs[c], "not decreasing in price")
    dom = Q > P + ORDER_MARGIN
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            bad = np.argwhere(~(vals[i] < vals[j]) & dom)
            for r, c in bad[:1]:
                report.add(i, j, ps[r], ps[r], qs[c], "ordering b_i < b_j violated")
    return report


def check_second_type_compatibility(fam, grid_n=101):
    """Single ``+ -> -`` sign change of ``b_i(p, .) - b_j(p', .)`` in ``pbar``.

    The scan covers every ``(p, p')`` lattice pair over the buyer range where
    both models are purchasable (``pbar`` at least both prices and both
    utilities non-negative).
    """
    if grid_n < 3:
        raise DomainError("grid_n must be >= 3")
    ps = np.linspace(0.0, fam.price_cap, grid_n)
    qs = np.linspace(fam.buyer_bounds[0], fam.buyer_bounds[1], grid_n)
    report = CompatibilityReport()
    n = len(fam.members)
    for i in range(n - 1):
        bi_all = fam.members[i](ps[:, None], qs[None, :])
        for j in range(i + 1, n):
            bj_all = fam.members[j](ps[:, None], qs[None, :])
            dom_j = (bj_all >= 0) & (qs[None, :] >= ps[:, None])
            for r in range(grid_n):
                mask = (bi_all[r][None, :] >= 0) & (qs[None, :] >= ps[r]) & dom_j
                bad, col, why = sign_pattern_violations(bi_all[r][None, :] - bj_all, mask)
                for c in np.flatnonzero(bad):
                    report.add(i, j, ps[r], ps[c], qs[min(col[c], grid_n - 1)], str(why[c]))
    return report


@dataclass(frozen=True)
class PriceAllocation:
    """Per-model ``[lo, hi)`` intervals in buyer max-price space."""

    intervals: tuple
    connected: tuple = ()

    def validate(self, tol=1e-9):
        last = -math.inf
        for i, iv in enumerate(self.intervals):
            if iv is None:
                continue
            if iv[0] < last - tol:
                raise ConfigurationError(f"model {i + 1}: price interval out of order")
            last = iv[1]
        return self


@dataclass(frozen=True)
class QuasiDualScenario:
    costs: tuple
    family: QuasiDualFamily
    dist: BuyerDistribution
    curve: CostAccuracyCurve = None
    solver: SolverSettings = SolverSettings()
    price_grid: int = 200
    name: str = ""

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        object.__setattr__(self, "costs", costs)
        if len(costs) != len(self.family):
            raise ConfigurationError(f"{len(costs)} costs for {len(self.family)} utilities")
        for i in range(1, len(costs)):
            if not costs[i] > costs[i - 1]:
                raise ConfigurationError(f"costs must be strictly increasing (model {i + 1})")

    @property
    def n(self):
        return len(self.costs)

    @property
    def accuracies(self):
        if self.curve is None:
            return None
        return tuple(self.curve(c) for c in self.costs)


# --- exact allocation in buyer-price space -----------------------------------------

_SCAN = 2048


def _roots(fun, lo, hi, n=_SCAN):
    x = np.linspace(lo, hi, n + 1)
    v = fun(x)
    out = []
    for k in np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0):
        out.append(bisect(fun, float(x[k]), float(x[k + 1])))
    out.extend(float(t) for t in x[v == 0])
    return out


def _choice(prices, fam, active, q):
    q = np.asarray(q, float)
    best = np.full(q.shape, -np.inf)
    pick = np.full(q.shape, -1)
    for i, f in enumerate(fam.members[: len(prices)]):
        if not active[i]:
            continue
        u = f(prices[i], q)
        ok = (q >= prices[i]) & (u >= 0) & (u >= best)
        best = np.where(ok, u, best)
        pick = np.where(ok, i, pick)
    return pick


def qd_allocate(prices, fam, dist, active=None):
    """Buyer sets and revenues at fixed prices, exact up to root precision.

    Breakpoints are every price, every utility zero and every pairwise
    crossing inside the buyer support; the buyer rule is constant between
    consecutive breakpoints. Returns ``(PriceAllocation, revenues)``.
    """
    n = len(prices)
    if active is None:
        active = [p is not None for p in prices]
    lo, hi = dist.support
    pts = {lo, hi}
    live = [i for i in range(n) if active[i]]
    for i in live:
        fi, pi = fam.members[i], float(prices[i])
        if lo < pi < hi:
            pts.add(pi)
        pts.update(_roots(lambda q, fi=fi, pi=pi: fi(pi, q), lo, hi))
        for j in live:
            if j > i:
                fj, pj = fam.members[j], float(prices[j])
                pts.update(_roots(lambda q, fi=fi, pi=pi, fj=fj, pj=pj: fi(pi, q) - fj(pj, q), lo, hi))
    pts = np.array(sorted(t for t in pts if lo <= t <= hi))
    mids = 0.5 * (pts[:-1] + pts[1:])
    pick = _choice([float(p) if p is not None else 0.0 for p in prices], fam, active, mids)
    segs = [[] for _ in range(n)]
    for k, i in enumerate(pick.tolist()):
        if i < 0 or pts[k + 1] <= pts[k]:
            continue
        s = segs[i]
        if s and abs(s[-1][1] - pts[k]) <= 0.0:
            s[-1][1] = float(pts[k + 1])
        else:
            s.append([float(pts[k]), float(pts[k + 1])])
    intervals, conn, revs = [], [], []
    for i in range(n):
        s = segs[i]
        if not s:
            intervals.append(None)
            conn.append(True)
            revs.append(0.0)
            continue
        intervals.append((s[0][0], s[-1][1]))
        conn.append(len(s) == 1)
        revs.append(float(prices[i]) * sum(dist.interval_mass(a, b) for a, b in s))
    return PriceAllocation(tuple(intervals), tuple(conn)), revs


@dataclass
class QDOracleResult:
    grid: np.ndarray
    choice: np.ndarray
    runs: list
    revenues: list
    spacing: float

    def connected(self, min_gap=2):
        for rs in self.runs:
            for (_, e0), (s1, _) in zip(rs, rs[1:]):
                if s1 - e0 - 1 >= min_gap:
                    return False
        return True

    def ordered(self):
        spans = sorted((rs[0][0], i) for i, rs in enumerate(self.runs) if rs)
        idx = [i for _, i in spans]
        return idx == sorted(idx)


def qd_oracle_allocate(prices, fam, dist, grid_n=100_000, active=None):
    """Brute-force buyer choice on a midpoint grid over buyer max prices."""
    if grid_n < 100:
        raise DomainError("oracle grid needs at least 100 points")
    n = len(prices)
    if active is None:
        active = [p is not None for p in prices]
    lo, hi = dist.support
    h = (hi - lo) / grid_n
    grid = lo + (np.arange(grid_n) + 0.5) * h
    w = np.asarray(dist.pdf(grid), float) * h
    pick = _choice([float(p) if p is not None else 0.0 for p in prices], fam, active, grid)
    runs, revs = [], []
    for i in range(n):
        idx = np.flatnonzero(pick == i)
        if len(idx) == 0:
            runs.append([])
            revs.append(0.0)
            continue
        br = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate(([idx[0]], idx[br + 1]))
        ends = np.concatenate((idx[br], [idx[-1]]))
        runs.append(list(zip(starts.tolist(), ends.tolist())))
        revs.append(float(prices[i]) * float(w[idx].sum()))
    return QDOracleResult(grid, pick, runs, revs, h)


# --- sequential quasi-dual pricing ---------------------------------------------------


@dataclass(frozen=True)
class QDCase:
    kind: str
    lo: float
    hi: float
    ref: int = -1

    @property
    def label(self):
        if self.kind == "competition":
            return f"competition-with-{self.ref + 1}"
        return self.kind


@dataclass
class QDState:
    scenario: QuasiDualScenario
    prices: list = field(default_factory=list)
    active: list = field(default_factory=list)
    cases: list = field(default_factory=list)
    trace: list = field(default_factory=list)


@dataclass
class QuasiDualSolution:
    scenario: QuasiDualScenario
    prices: tuple
    active: tuple
    allocation: PriceAllocation
    revenues: tuple
    profits: tuple
    objective: float
    cases: tuple
    trace: list

    @property
    def case_labels(self):
        return tuple("inactive" if c is None else c.label for c in self.cases)


def _qd_label(state, p):
    """``(kind, ref)`` of the market situation at new price ``p``; None = no sale."""
    scn = state.scenario
    k = len(state.prices)
    fam = scn.family
    before, rev_before = qd_allocate(state.prices, fam, scn.dist, state.active)
    after, rev_after = qd_allocate(state.prices + [p], fam, scn.dist, state.active + [True])
    mine = after.intervals[k]
    if mine is None or rev_after[k] <= 0:
        return None
    live = [i for i in range(k) if before.intervals[i] is not None and rev_before[i] > 0]
    if not live:
        return ("single", -1)
    for i in live:
        if after.intervals[i] is None:
            return ("coverage", i)
    for i in live:
        b0, a0 = before.intervals[i], after.intervals[i]
        if a0[1] < b0[1] - 1e-12 and abs(a0[1] - mine[0]) <= 1e-9:
            return ("competition", i)
    end = max(before.intervals[i][1] for i in live)
    last = max(live, key=lambda i: before.intervals[i][1])
    if abs(mine[0] - end) <= 1e-9:
        return ("no-competition-adjacent", last)
    if mine[0] > end:
        return ("no-competition", last)
    return ("coverage", live[0])


def qd_total(state, p):
    scn = state.scenario
    _, revs = qd_allocate(state.prices + [float(p)], scn.family, scn.dist,
                          state.active + [True])
    return float(sum(revs))


def qd_enumerate_cases(state):
    scn = state.scenario
    P = float(scn.family.price_cap)
    grid = np.linspace(0.0, P, max(scn.price_grid, 3))
    labels = [_qd_label(state, float(p)) for p in grid]
    edges = [0.0]
    starts = [0]
    for k in range(len(grid) - 1):
        if labels[k] != labels[k + 1]:
            left = labels[k]
            t = bisect(lambda q, left=left: 1.0 if _qd_label(state, q) == left else -1.0,
                       float(grid[k]), float(grid[k + 1]))
            edges.append(t)
            starts.append(k + 1)
    edges.append(P)
    out = []
    for r, s in enumerate(starts):
        if labels[s] is None:
            continue
        out.append(QDCase(labels[s][0], edges[r], edges[r + 1], labels[s][1]))
    return out


def qd_price_next(state):
    """Price the next quasi-dual model with upstream prices frozen."""
    scn = state.scenario
    k = len(state.prices)
    if k >= scn.n:
        raise ConfigurationError("every model is already priced")
    upstream = 0.0
    if k:
        _, revs = qd_allocate(state.prices, scn.family, scn.dist, state.active)
        upstream = float(sum(revs))

    def total(p):
        if np.ndim(p) == 0:
            return qd_total(state, float(p))
        return np.array([qd_total(state, float(t)) for t in p])

    results = []
    best = None
    for case in qd_enumerate_cases(state):
        p, v = maximize(total, case.lo, case.hi, max(scn.price_grid // 4, 16), scn.solver.price_tol)
        results.append((case, p, v))
        if best is None or v > best[2] + 1e-9 * max(1.0, abs(v)) or (
            abs(v - best[2]) <= 1e-9 * max(1.0, abs(v)) and p > best[1]
        ):
            best = (case, p, v)
    state.trace.append(results)
    if best is None or not best[2] > upstream + 1e-9 * max(1.0, upstream):
        state.prices.append(best[1] if best else 0.0)
        state.active.append(False)
        state.cases.append(None)
        return state
    state.prices.append(float(best[1]))
    state.active.append(True)
    state.cases.append(best[0])
    return state


def qd_price_single(scn):
    """``(price, PriceAllocation, revenue)`` of a lone quasi-dual model."""
    state = qd_price_next(QDState(scn))
    alloc, revs = qd_allocate(state.prices, scn.family, scn.dist, state.active)
    return state.prices[0], alloc, revs[0]


def solve_chain_qd(scn):
    state = QDState(scn)
    for _ in range(scn.n):
        qd_price_next(state)
    alloc, revs = qd_allocate(state.prices, scn.family, scn.dist, state.active)
    profits = tuple(max(r - c, 0.0) for r, c in zip(revs, scn.costs))
    return QuasiDualSolution(scn, tuple(state.prices), tuple(state.active), alloc, tuple(revs),
                             profits, float(sum(profits)), tuple(state.cases), state.trace)


# --- dual via transposition ------------------------------------------------------------


@dataclass(frozen=True)
class DualScenario:
    """Models sold at a fixed price menu; the seller picks each model's accuracy.

    ``members[i](a, pbar)`` is decreasing in the accuracy decision ``a`` and
    increasing in the buyer's max price ``pbar``, mirroring the primal roles.
    """

    costs: tuple
    menu: tuple
    members: tuple
    dist: BuyerDistribution
    decision_cap: float
    buyer_bounds: tuple = (0.0, 1.0)
    solver: SolverSettings = SolverSettings()
    name: str = ""

    def __post_init__(self):
        menu = tuple(float(m) for m in self.menu)
        object.__setattr__(self, "menu", menu)
        if len(menu) != len(self.members) or len(menu) != len(self.costs):
            raise ConfigurationError("menu, costs and utilities must have equal length")
        for i in range(1, len(menu)):
            if not menu[i] > menu[i - 1]:
                raise ConfigurationError(f"price menu must be strictly increasing (model {i + 1})")

    @property
    def n(self):
        return len(self.menu)


@dataclass
class DualSolution:
    scenario: DualScenario
    decisions: tuple
    active: tuple
    buyer_intervals: tuple
    revenues: tuple
    profits: tuple
    objective: float
    cases: tuple
    primal: object


def to_primal(dscn):
    """The primal instance obtained by swapping decision and buyer-type roles."""
    fam = UtilityFamily(tuple(dscn.members), tuple(dscn.buyer_bounds), float(dscn.decision_cap))
    curve = CostAccuracyCurve("table", dscn.costs, dscn.menu)
    return Scenario(dscn.costs, fam, dscn.dist, curve, dscn.solver, name=dscn.name)


def to_dual(scn):
    """Inverse of :func:`to_primal` on a primal scenario."""
    return DualScenario(
        costs=scn.costs,
        menu=scn.accuracies,
        members=tuple(scn.family.members),
        dist=scn.dist,
        decision_cap=scn.price_cap,
        buyer_bounds=scn.family.accuracy_bounds,
        solver=scn.solver,
        name=scn.name,
    )


def solve_chain_dual(dscn):
    sol = solve_chain(to_primal(dscn))
    return DualSolution(
        scenario=dscn,
        decisions=sol.prices,
        active=sol.active,
        buyer_intervals=sol.allocation.intervals,
        revenues=sol.revenues,
        profits=sol.profits,
        objective=sol.objective,
        cases=sol.case_labels,
        primal=sol,
    )
