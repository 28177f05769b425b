"""Root finding and bounded 1-D maximization shared by the solvers.

Every routine accepts either Python floats or numpy arrays. Scalar calls take
a pure-Python path because the solvers call them thousands of times inside
golden-section loops.
"""

import math

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

#: Relative slack used when comparing objective values for ties.
TIE_TOL = 1e-12


def bisect(fun, lo, hi, iters=64):
    """Locate a sign change of ``fun`` in ``[lo, hi]``.

    ``fun(lo)`` and ``fun(hi)`` must have opposite signs (or one of them be
    zero). Scalars are refined until the bracket cannot shrink further; arrays
    run a fixed number of halvings, which is past double precision for any
    bracket of width <= 1e3.
    """
    if np.ndim(lo) == 0 and np.ndim(hi) == 0:
        return _bisect_scalar(fun, float(lo), float(hi))
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    lo = lo.copy()
    hi = hi.copy()
    f_lo = fun(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f_mid = fun(mid)
        same = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(same, mid, lo)
        f_lo = np.where(same, f_mid, f_lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _bisect_scalar(fun, lo, hi):
    f_lo = fun(lo)
    if f_lo == 0.0:
        return lo
    f_hi = fun(hi)
    if f_hi == 0.0:
        return hi
    neg_lo = f_lo < 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = fun(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0.0) == neg_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def golden_max(fun, lo, hi, tol=1e-9):
    """Golden-section search for a maximum of a scalar function on ``[lo, hi]``.

    Returns ``(x, f(x))`` for the best point evaluated, bracket ends included.
    """
    lo = float(lo)
    hi = float(hi)
    best_x, best_f = lo, fun(lo)
    f_hi = fun(hi)
    if f_hi >= best_f:
        best_x, best_f = hi, f_hi
    if hi - lo <= tol:
        return best_x, best_f
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1 = fun(x1)
    f2 = fun(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = fun(x2)
    for x, f in ((x1, f1), (x2, f2)):
        if f > best_f:
            best_x, best_f = x, f
    return best_x, best_f


def prefer(candidate, incumbent, tie_tol=TIE_TOL):
    """Return True if ``(x, f)`` ``candidate`` beats ``incumbent``.

    Larger value wins; values within ``tie_tol`` (relative to magnitude) are
    ties and go to the larger argument.
    """
    if incumbent is None:
        return True
    (xc, fc), (xi, fi) = candidate, incumbent
    slack = tie_tol * max(1.0, abs(fc), abs(fi))
    if fc > fi + slack:
        return True
    if fc < fi - slack:
        return False
    return xc > xi


def maximize(fun, lo, hi, n_grid=2000, tol=1e-9, candidates=(), n_refine=4, tie_tol=TIE_TOL):
    """Dense grid plus golden refinement of the best local maxima.

    ``fun`` must accept both float and array arguments. Extra ``candidates``
    inside ``[lo, hi]`` are evaluated directly. Values within ``tie_tol``
    count as equal and go to the larger argument. Returns ``(x, f(x))``.
    """
    keep = lambda best, cand: cand if prefer(cand, best, tie_tol) else best  # noqa: E731
    lo = float(lo)
    hi = float(hi)
    if hi < lo:
        raise ValueError("empty interval")
    if hi - lo <= tol:
        best = keep(None, (lo, float(fun(lo))))
        return keep(best, (hi, float(fun(hi))))
    grid = np.linspace(lo, hi, max(int(n_grid), 3))
    vals = np.asarray(fun(grid), float)
    best = None
    for k in (0, len(grid) - 1):
        best = keep(best, (float(grid[k]), float(vals[k])))
    left = np.concatenate(([-np.inf], vals[:-1]))
    right = np.concatenate((vals[1:], [-np.inf]))
    peaks = np.flatnonzero((vals >= left) & (vals >= right))
    order = peaks[np.argsort(-vals[peaks], kind="stable")][:n_refine]
    for k in sorted(order.tolist()):
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, len(grid) - 1)]
        best = keep(best, (float(grid[k]), float(vals[k])))
        x, f = golden_max(lambda t: float(fun(t)), a, b, tol)
        best = keep(best, (x, f))
    for c in candidates:
        if lo <= c <= hi:
            best = keep(best, (float(c), float(fun(float(c)))))
    return best


def _keep(best, cand):
    return cand if prefer(cand, best) else best
