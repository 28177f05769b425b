"""Stationary points of case revenues for additively separable utilities.

With ``b(p, a) = f(p) + h(a)`` the marginal buyer is ``a'(p) = h^-1(-f(p))``
and the crossing with an upstream model ``j`` is
``a*(p) = (h - h_j)^-1(f_j(p_j) - f(p))``. Maxima of each case revenue sit at
interval endpoints, at density kinks, or at roots of the first-order
condition, which is what this module enumerates.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._numeric import bisect
from .exceptions import ConfigurationError

FOC_TOL = 1e-9


@dataclass(frozen=True)
class SeparableParts:
    utility: object

    def f(self, p):
        return self.utility.price_part(p)

    def h(self, a):
        return self.utility.accuracy_part(a)

    def df(self, p):
        return self.utility.d_price(p)

    def dh(self, a):
        return self.utility.d_accuracy(a)

    def f_inv(self, y):
        return self.utility.price_inverse(y)

    def h_inv(self, y):
        return self.utility.accuracy_inverse(y)


@dataclass(frozen=True)
class StationaryCandidate:
    """A root of a case's first-order condition.

    ``anchor`` is the ``(price, endpoint)`` pair at which the trajectory of the
    moving endpoint is pinned; for the single-model case it is
    ``(p, a'(p))`` and for competition ``(p, a*(p))``.
    """

    price: float
    case: str
    residual: float
    anchor: tuple


def marginal_buyer(parts, p):
    """Closed-form ``h^-1(-f(p))``; None when outside the accuracy form's range."""
    a = parts.h_inv(-parts.f(p))
    if np.ndim(a) == 0:
        return None if not math.isfinite(a) else float(a)
    return a


def marginal_slope(parts, p, a=None):
    """``da'/dp = -f'(p) / h'(a')``."""
    if a is None:
        a = parts.h_inv(-parts.f(p))
    return -parts.df(p) / parts.dh(a)


def price_for_marginal(parts, a):
    """Price at which the buyer with accuracy ``a`` has zero utility."""
    p = parts.f_inv(-parts.h(a))
    return None if not math.isfinite(p) else float(p)


def _scan_roots(foc, foc_scalar, lo, hi, n_scan, tag, anchor):
    if not hi > lo:
        return []
    grid = np.linspace(lo, hi, n_scan + 1)
    with np.errstate(all="ignore"):
        vals = np.asarray(foc(grid), float)
        # The condition is often undefined exactly at a situation boundary;
        # pull a bad end sample just inside so a root next to it is not lost.
        for end, inward in ((0, 1.0), (n_scan, -1.0)):
            if not np.isfinite(vals[end]):
                for frac in (1e-12, 1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.5):
                    q = grid[end] + inward * frac * (hi - lo) / n_scan
                    v = float(foc_scalar(float(q)))
                    if math.isfinite(v):
                        grid[end], vals[end] = q, v
                        break
    out = []
    for k in range(n_scan + 1):
        if vals[k] == 0.0:
            out.append(float(grid[k]))
    for k in range(n_scan):
        v0, v1 = vals[k], vals[k + 1]
        if np.isfinite(v0) and np.isfinite(v1) and v0 * v1 < 0:
            out.append(bisect(foc_scalar, float(grid[k]), float(grid[k + 1])))
    cands = []
    for p in sorted(set(out)):
        r = foc_scalar(p)
        if math.isfinite(r) and abs(r) <= FOC_TOL:
            cands.append(StationaryCandidate(p, tag, abs(r), anchor(p)))
    return cands


def single_foc(parts, A, dist):
    """First-order condition of ``p * (F(A) - F(a'(p)))`` as a function of p."""
    FA = dist.cdf(A)

    def foc(p):
        with np.errstate(all="ignore"):
            a = parts.h_inv(-parts.f(p))
            val = FA - dist.cdf(a) - p * dist.pdf(a) * marginal_slope(parts, p, a)
        if np.ndim(val) == 0:
            return float(val) if math.isfinite(a) and a <= A else math.nan
        return np.where(np.isfinite(a) & (a <= A), val, np.nan)

    return foc


def stationary_single(parts, A, dist, price_range, n_scan=500, case="single"):
    """Roots of the single-model first-order condition on ``price_range``."""
    foc = single_foc(parts, A, dist)
    lo, hi = price_range
    return _scan_roots(foc, foc, float(lo), float(hi), n_scan, case,
                       lambda p: (p, marginal_buyer(parts, p)))


def ode_identity_residual(cand, parts, A, dist):
    """Check the root against ``F(a') = F(A) + C/p`` with ``C`` from the root.

    The general solution of the first-order condition read as an ODE has
    slope ``dF(a')/dp = -C/p**2``; this returns its mismatch with the actual
    slope at the candidate.
    """
    p = cand.price
    a = marginal_buyer(parts, p)
    C = p * (dist.cdf(a) - dist.cdf(A))
    slope = dist.pdf(a) * marginal_slope(parts, p, a)
    return abs(slope + C / (p * p))


def crossing_accuracy(parts_i, parts_j, p_j, p, a_range):
    """``a*`` with ``b_i(p, a*) = b_j(p_j, a*)`` inside ``a_range``; NaN if none."""
    lo, hi = a_range
    d = lambda a: parts_i.h(a) - parts_j.h(a) + parts_i.f(p) - parts_j.f(p_j)  # noqa: E731
    d_lo, d_hi = d(lo), d(hi)
    ok = (d_lo <= 0) & (d_hi >= 0)
    if np.ndim(p) == 0:
        return bisect(d, lo, hi) if ok else math.nan
    root = bisect(d, lo + 0.0 * p, hi + 0.0 * p)
    return np.where(ok, root, np.nan)


def _check_invertible(parts_i, parts_j, a_range):
    aa = np.linspace(a_range[0], a_range[1], 257)
    if np.any(parts_i.dh(aa) - parts_j.dh(aa) <= 0):
        raise ConfigurationError("h_i - h_j is not strictly increasing on the crossing range")


def competition_foc(parts_i, parts_j, p_j, A, dist, a_range):
    FA = dist.cdf(A)

    def foc(p):
        with np.errstate(all="ignore"):
            a = crossing_accuracy(parts_i, parts_j, p_j, p, a_range)
            slope = -parts_i.df(p) / (parts_i.dh(a) - parts_j.dh(a))
            val = FA - dist.cdf(a) - (p - p_j) * dist.pdf(a) * slope
        if np.ndim(val) == 0:
            return float(val) if math.isfinite(a) else math.nan
        return np.where(np.isfinite(a), val, np.nan)

    return foc


def stationary_competition(parts_i, parts_j, p_j, A, dist, price_range, a_range, n_scan=500):
    """Roots of ``d/dp [(p - p_j) (F(A) - F(a*(p)))] = 0`` on ``price_range``."""
    _check_invertible(parts_i, parts_j, a_range)
    foc = competition_foc(parts_i, parts_j, p_j, A, dist, a_range)
    lo, hi = price_range
    return _scan_roots(
        foc, foc, float(lo), float(hi), n_scan, "competition",
        lambda p: (p, float(crossing_accuracy(parts_i, parts_j, p_j, p, a_range))),
    )


def price_for_crossing(parts_i, parts_j, p_j, a):
    """Price at which the crossing with model ``j`` sits exactly at ``a``."""
    p = parts_i.f_inv(parts_j.f(p_j) + parts_j.h(a) - parts_i.h(a))
    return None if not math.isfinite(p) else float(p)
