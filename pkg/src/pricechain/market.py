"""Market allocations, enveloping utilities and the buyer-choice oracle.

Two independent routes compute who buys what at given prices:

* :func:`allocate` folds models in index order into the current envelope; a
  new model claims the upper part of the line where it beats the envelope.
  This is exact up to root-finding precision and is what the pricing solvers
  use.
* :func:`oracle_allocate` discretizes buyers on a weighted grid and applies
  the buyer rule literally. It knows nothing about envelopes or crossings.
"""

from dataclasses import dataclass, field

import numpy as np

from ._numeric import bisect
from .distributions import BuyerDistribution, PiecewiseLinear, TruncatedNormal, Uniform
from .exceptions import DomainError, StructuralError

__all__ = [
    "BuyerDistribution",
    "Uniform",
    "PiecewiseLinear",
    "TruncatedNormal",
    "MarketAllocation",
    "Piece",
    "EnvelopeUtility",
    "Block",
    "mass",
    "build_envelope",
    "extract_blocks",
    "oracle_allocate",
    "revenue",
    "allocate",
    "advance",
]

# Endpoint provenance codes used by the fold.
NONE, SUPPORT, ZERO, CROSS, END, OWN = 0, 1, 2, 3, 4, 5
PROVENANCE = {NONE: "none", SUPPORT: "support", ZERO: "zero", CROSS: "cross", END: "end", OWN: "own"}


def mass(dist, lo, hi):
    if lo > hi:
        raise DomainError(f"mass interval ({lo}, {hi}] is reversed")
    return dist.interval_mass(lo, hi)


@dataclass(frozen=True)
class MarketAllocation:
    """Per-model half-open intervals ``(lo, hi]``; ``None`` marks no buyers."""

    intervals: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "intervals",
            tuple(None if iv is None else (float(iv[0]), float(iv[1])) for iv in self.intervals),
        )

    def __len__(self):
        return len(self.intervals)

    def validate(self, accuracies=None, tol=1e-12):
        """Raise :class:`StructuralError` unless the ordering invariants hold."""
        last_hi = -np.inf
        for i, iv in enumerate(self.intervals):
            if iv is None:
                continue
            lo, hi = iv
            if not lo < hi:
                raise StructuralError(f"model {i + 1}: interval ({lo}, {hi}] is empty")
            if lo < last_hi - tol:
                raise StructuralError(f"model {i + 1}: interval overlaps or precedes a lower model")
            if accuracies is not None and hi > accuracies[i] + tol:
                raise StructuralError(f"model {i + 1}: serves buyers above its accuracy")
            last_hi = hi
        return self

    def is_empty(self):
        return all(iv is None for iv in self.intervals)


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    index: int
    price: float
    utility: object

    def value(self, a):
        return self.utility(self.price, a)


@dataclass(frozen=True)
class EnvelopeUtility:
    """Utility of the winning model at each accuracy; zero off the support."""

    pieces: tuple = ()

    def __call__(self, a):
        a = np.asarray(a, float)
        out = np.zeros_like(a)
        for pc in self.pieces:
            inside = (a > pc.lo) & (a <= pc.hi)
            if np.any(inside):
                out = np.where(inside, pc.value(a), out)
        return float(out) if out.ndim == 0 else out

    @property
    def support_end(self):
        return max((pc.hi for pc in self.pieces), default=None)

    def in_support(self, a):
        a = np.asarray(a, float)
        inside = np.zeros(a.shape, bool)
        for pc in self.pieces:
            inside |= (a > pc.lo) & (a <= pc.hi)
        return inside

    def jumps(self):
        """``(point, left_limit, right_limit)`` at every piece boundary."""
        out = []
        for k, pc in enumerate(self.pieces):
            left = pc.value(pc.hi)
            nxt = self.pieces[k + 1] if k + 1 < len(self.pieces) else None
            right = nxt.value(nxt.lo) if nxt is not None and nxt.lo == pc.hi else 0.0
            out.append((pc.hi, float(left), float(right)))
        return out


@dataclass(frozen=True)
class Block:
    lo: float
    hi: float
    members: tuple


def build_envelope(alloc, prices, fam):
    alloc.validate()
    pieces = []
    for i, iv in enumerate(alloc.intervals):
        if iv is None:
            continue
        if prices[i] is None:
            raise StructuralError(f"model {i + 1} has buyers but no price")
        pieces.append(Piece(iv[0], iv[1], i, float(prices[i]), fam.members[i]))
    return EnvelopeUtility(tuple(pieces))


def extract_blocks(env, tol=1e-12):
    """Split the support at gaps and at downward jumps."""
    blocks = []
    cur = None
    for k, pc in enumerate(env.pieces):
        if cur is None:
            cur = [pc.lo, pc.hi, [k]]
            continue
        prev = env.pieces[cur[2][-1]]
        contiguous = abs(pc.lo - prev.hi) <= tol
        drop = contiguous and prev.value(prev.hi) > pc.value(pc.lo) + tol
        if contiguous and not drop:
            cur[1] = pc.hi
            cur[2].append(k)
        else:
            blocks.append(Block(cur[0], cur[1], tuple(cur[2])))
            cur = [pc.lo, pc.hi, [k]]
    if cur is not None:
        blocks.append(Block(cur[0], cur[1], tuple(cur[2])))
    return blocks


def revenue(alloc, prices, dist):
    out = []
    for i, iv in enumerate(alloc.intervals):
        if iv is None or prices[i] is None:
            out.append(0.0)
        else:
            out.append(float(prices[i]) * dist.interval_mass(iv[0], iv[1]))
    return out


@dataclass
class StepResult:
    """Outcome of adding one model to an envelope at price(s) ``p``.

    ``x`` is the new model's lower endpoint; it serves ``(x, A]`` and every
    upstream piece is cut at ``x``. ``kind``/``ref`` record how ``x`` arose
    (marginal buyer, crossing with piece ``ref``, or the end of piece ``ref``).
    """

    x: object
    kind: object
    ref: object
    zero: object
    pieces: list


def advance(pieces, f, A, a_lo, p):
    """Add a model with utility ``f`` and accuracy ``A`` at price ``p``.

    ``pieces`` is a list of ``(index, lo, hi, utility, price, upper_kind,
    upper_ref)`` tuples whose bounds may be arrays broadcastable with ``p``.
    Ties between the new model and the envelope go to the new model.
    """
    scalar = np.ndim(p) == 0 and all(np.ndim(pc[1]) == 0 and np.ndim(pc[4]) == 0 for pc in pieces)
    g = lambda a: f(p, a)  # noqa: E731
    g_lo = g(a_lo)
    g_hi = g(A)
    sells = g_hi >= 0
    need = sells & (g_lo < 0)
    x = np.where(g_lo >= 0, a_lo, A) + 0.0 * np.asarray(p, float)
    if np.any(need):
        root = bisect(g, a_lo + 0.0 * x, A + 0.0 * x)
        x = np.where(need, root, x)
    zero = x
    kind = np.where(g_lo >= 0, SUPPORT, ZERO)
    ref = np.full(np.shape(x), -1)
    for j, lo, hi, fj, pj, _, _ in pieces:
        live = sells & (hi > lo) & (hi > x)
        if not np.any(live):
            continue
        left = np.maximum(lo, x)
        d_hi = g(hi) - fj(pj, hi)
        d_left = g(left) - fj(pj, left)
        lose = live & (d_hi < 0)
        cross = live & ~lose & (d_left < 0)
        if np.any(cross):
            a_star = bisect(lambda a: g(a) - fj(pj, a), left + 0.0 * x, hi + 0.0 * x)
            x = np.where(cross, a_star, x)
        x = np.where(lose, hi, x)
        kind = np.where(lose, END, np.where(cross, CROSS, kind))
        ref = np.where(lose | cross, j, ref)
    x = np.where(sells, x, A)
    kind = np.where(sells & (x < A), kind, NONE)
    new_pieces = []
    for j, lo, hi, fj, pj, uk, ur in pieces:
        cut = x < hi
        new_pieces.append((j, lo, np.where(cut, np.maximum(x, lo), hi), fj, pj,
                           np.where(cut, kind, uk), np.where(cut, -2, ur)))
    new_pieces.append((None, x, np.where(kind == NONE, x, A), f, p, OWN, -1))
    if scalar:
        x, zero = float(x), float(zero)
        kind, ref = int(kind), int(ref)
        new_pieces = [
            (j, float(lo), float(hi), fj, pj, int(uk), int(ur)) for j, lo, hi, fj, pj, uk, ur in new_pieces
        ]
    return StepResult(x, kind, ref, zero, new_pieces)


@dataclass
class Allocation:
    """Exact allocation with endpoint provenance for every model."""

    allocation: MarketAllocation
    lower: list = field(default_factory=list)
    upper: list = field(default_factory=list)


def allocate(prices, fam, accuracies, active=None):
    """Exact buyer-choice allocation at fixed ``prices``.

    Models with ``active[i]`` false (or price None) are not offered.
    ``lower[i]``/``upper[i]`` are ``(kind, ref)`` provenance tags for the
    endpoints: kind is one of ``support``, ``zero``, ``cross``, ``end`` for the
    lower end and ``own`` (the model's accuracy) or ``cross`` for the upper
    end; ``ref`` is the 0-based index of the other model involved.
    """
    a_lo = fam.accuracy_bounds[0]
    n = len(accuracies)
    if active is None:
        active = [p is not None for p in prices]
    pieces = []
    lower = [None] * n
    for i in range(n):
        if not active[i]:
            continue
        step = advance(pieces, fam.members[i], float(accuracies[i]), a_lo, float(prices[i]))
        new = step.pieces
        new[-1] = (i,) + new[-1][1:]
        # Upstream pieces cut by model i take it as their upper reference.
        pieces = []
        for pc in new:
            j, lo, hi, fj, pj, uk, ur = pc
            if ur == -2:
                ur = i
            pieces.append((j, lo, hi, fj, pj, uk, ur))
        ref = step.ref
        lower[i] = (PROVENANCE[step.kind], int(ref))
    intervals = [None] * n
    upper = [None] * n
    for j, lo, hi, fj, pj, uk, ur in pieces:
        if hi > lo:
            intervals[j] = (lo, hi)
            upper[j] = ("own", -1) if uk == OWN else ("cross", int(ur))
        else:
            lower[j] = None
    return Allocation(MarketAllocation(tuple(intervals)), lower, upper)


def allocate_curve(i, price_grid, prices, fam, accuracies, active=None):
    """Lower/upper endpoints of every model while model ``i`` sweeps a grid.

    Returns a list of ``(lo, hi)`` arrays, one per model (None when inactive).
    """
    a_lo = fam.accuracy_bounds[0]
    n = len(accuracies)
    if active is None:
        active = [p is not None for p in prices]
    grid = np.asarray(price_grid, float)
    pieces = []
    for k in range(n):
        if not (active[k] or k == i):
            continue
        p = grid if k == i else float(prices[k]) + 0.0 * grid
        step = advance(pieces, fam.members[k], float(accuracies[k]), a_lo, p)
        pieces = [(k if pc[0] is None else pc[0],) + pc[1:] for pc in step.pieces]
    out = [None] * n
    for j, lo, hi, *_ in pieces:
        out[j] = (lo, np.maximum(hi, lo))
    return out


@dataclass
class OracleResult:
    grid: np.ndarray
    weights: np.ndarray
    choice: np.ndarray
    runs: list
    intervals: list
    revenues: list
    spacing: float

    def connected(self, min_gap=2):
        """True if no model's buyer set has a gap of ``min_gap`` or more points."""
        for rs in self.runs:
            for (s0, e0), (s1, e1) in zip(rs, rs[1:]):
                if s1 - e0 - 1 >= min_gap:
                    return False
        return True

    def ordered(self):
        """True if buyer sets appear along the grid in model-index order."""
        spans = [(rs[0][0], rs[-1][1], i) for i, rs in enumerate(self.runs) if rs]
        spans.sort()
        idx = [i for _, _, i in spans]
        return idx == sorted(idx)

    def edges(self, i):
        """Continuous ``(lo, hi]`` estimate of model ``i``'s buyer set."""
        rs = self.runs[i]
        if not rs:
            return None
        h = self.spacing
        return (float(self.grid[rs[0][0]] - h / 2), float(self.grid[rs[-1][1]] + h / 2))


def oracle_allocate(prices, fam, accuracies, dist, grid_n=100_000, active=None):
    """Brute-force buyer choice on a midpoint grid over the buyer support.

    Each grid buyer picks the model with the highest non-negative utility among
    those with ``A_i >= a``; ties go to the higher index. Revenues are Riemann
    sums ``p_i * sum(pdf(a_k) * h)`` over each model's buyers.
    """
    if grid_n < 100:
        raise DomainError("oracle grid needs at least 100 points")
    n = len(accuracies)
    if active is None:
        active = [p is not None for p in prices]
    lo, hi = dist.support
    h = (hi - lo) / grid_n
    grid = lo + (np.arange(grid_n) + 0.5) * h
    weights = np.asarray(dist.pdf(grid), float) * h
    best = np.full(grid_n, -np.inf)
    choice = np.full(grid_n, -1)
    for i in range(n):
        if not active[i]:
            continue
        u = fam.members[i](float(prices[i]), grid)
        ok = (u >= 0) & (grid <= accuracies[i]) & (u >= best)
        best = np.where(ok, u, best)
        choice = np.where(ok, i, choice)
    runs = []
    intervals = []
    revenues = []
    for i in range(n):
        idx = np.flatnonzero(choice == i)
        if len(idx) == 0:
            runs.append([])
            intervals.append(None)
            revenues.append(0.0)
            continue
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate(([idx[0]], idx[breaks + 1]))
        ends = np.concatenate((idx[breaks], [idx[-1]]))
        runs.append(list(zip(starts.tolist(), ends.tolist())))
        intervals.append((float(grid[idx[0]]), float(grid[idx[-1]])))
        revenues.append(float(prices[i]) * float(weights[idx].sum()))
    return OracleResult(grid, weights, choice, runs, intervals, revenues, h)
