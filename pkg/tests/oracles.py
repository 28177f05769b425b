"""Brute-force reference computations, independent of the package solvers.

Everything here evaluates the buyer rule directly on grids: each buyer takes
the offered model with the highest non-negative utility among those accurate
enough, ties going to the higher index.
"""

import numpy as np


def buyer_grid(lo, hi, n):
    h = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * h, h


def choose(utilities, prices, accuracies, a, offered):
    """Index chosen by each buyer in ``a`` (-1 = nothing)."""
    best = np.full(a.shape, -np.inf)
    pick = np.full(a.shape, -1)
    for i, (u, p, A) in enumerate(zip(utilities, prices, accuracies)):
        if not offered[i]:
            continue
        v = u(p, a)
        ok = (v >= 0) & (a <= A) & (v >= best)
        pick = np.where(ok, i, pick)
        best = np.where(ok, v, best)
    return pick


def sequential_static(utilities, accuracies, pdf, support, cap, price_step=1e-3, buyer_n=100_000):
    """Static chain by brute force: every model scans a price grid with upstream frozen.

    Returns ``(prices, revenues, intervals)``; a model whose best total does
    not beat the upstream total is left out (price None).
    """
    a, h = buyer_grid(support[0], support[1], buyer_n)
    w = pdf(a) * h
    grid = np.linspace(0.0, cap, int(round(cap / price_step)) + 1)
    prices, offered = [], []
    upstream = 0.0
    for k in range(len(utilities)):
        best_p, best_tot = None, -np.inf
        for p in grid:
            trial = prices + [float(p)]
            pick = choose(utilities[: k + 1], [q if q is not None else 0.0 for q in trial],
                          accuracies[: k + 1], a, offered + [True])
            tot = sum(float(trial[i]) * w[pick == i].sum() for i in range(k + 1) if trial[i] is not None)
            if tot >= best_tot - 1e-12:
                best_p, best_tot = float(p), tot
        if best_tot > upstream + 1e-12:
            prices.append(best_p)
            offered.append(True)
            upstream = best_tot
        else:
            prices.append(None)
            offered.append(False)
    pick = choose(utilities, [q if q is not None else 0.0 for q in prices], accuracies, a, offered)
    revenues, intervals = [], []
    for i, p in enumerate(prices):
        sel = pick == i
        revenues.append(0.0 if p is None else p * w[sel].sum())
        intervals.append((float(a[sel][0] - h / 2), float(a[sel][-1] + h / 2)) if sel.any() else None)
    return prices, revenues, intervals


def own_revenue_curve(i, utilities, prices, accuracies, pdf, support, grid, buyer_n=20_000):
    """Revenue of model ``i`` over ``grid`` with every other price fixed."""
    a, h = buyer_grid(support[0], support[1], buyer_n)
    w = pdf(a) * h
    out = []
    for p in grid:
        trial = list(prices)
        trial[i] = float(p)
        pick = choose(utilities, trial, accuracies, a, [True] * len(trial))
        out.append(float(p) * w[pick == i].sum())
    return np.array(out)


def quasi_dual_choice(utilities, prices, q, offered):
    """Quasi-dual buyer rule over buyer max prices ``q``: needs ``p_i <= q`` and ``b_i >= 0``."""
    best = np.full(q.shape, -np.inf)
    pick = np.full(q.shape, -1)
    for i, (u, p) in enumerate(zip(utilities, prices)):
        if not offered[i]:
            continue
        v = u(p, q)
        ok = (v >= 0) & (p <= q) & (v >= best)
        pick = np.where(ok, i, pick)
        best = np.where(ok, v, best)
    return pick


def quasi_dual_sequential(utilities, pdf, support, cap, price_n=1001, buyer_n=20_000):
    """Static quasi-dual chain on a (price, buyer max price) grid."""
    q, h = buyer_grid(support[0], support[1], buyer_n)
    w = pdf(q) * h
    grid = np.linspace(0.0, cap, price_n)
    prices, offered, upstream = [], [], 0.0
    for k in range(len(utilities)):
        best_p, best_tot = None, -np.inf
        for p in grid:
            trial = prices + [float(p)]
            pick = quasi_dual_choice(utilities[: k + 1], [x if x is not None else 0.0 for x in trial], q,
                                     offered + [True])
            tot = sum(trial[i] * w[pick == i].sum() for i in range(k + 1) if trial[i] is not None)
            if tot >= best_tot - 1e-12:
                best_p, best_tot = float(p), tot
        if best_tot > upstream + 1e-12:
            prices.append(best_p)
            offered.append(True)
            upstream = best_tot
        else:
            prices.append(None)
            offered.append(False)
    return prices, upstream
