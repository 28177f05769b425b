"""Error bounds when the seller's utilities are off by at most ``eps_i``.

If the true utility of model ``i`` differs from the modelled one by no more
than ``eps_i`` and both are Lipschitz in accuracy with constants in
``[alpha_i, beta_i]``, every allocation endpoint moves by a bounded amount.
The bound used for an endpoint depends on how it arose (utility zero,
crossing with a neighbour, or the model's own accuracy) and on every way the
true endpoint could arise instead.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .exceptions import ConfigurationError
from .market import oracle_allocate
from .utility import UtilityFamily

WIDEN = 0.01


@dataclass(frozen=True)
class LipschitzProfile:
    alpha: tuple
    beta: tuple

    @property
    def interleaved(self):
        return not self.violations()

    def violations(self):
        out = []
        for i, (a, b) in enumerate(zip(self.alpha, self.beta)):
            if not 0 < a <= b:
                out.append(f"model {i + 1}: need 0 < alpha <= beta")
            if i and not a > self.beta[i - 1]:
                out.append(f"model {i + 1}: alpha {a:.6g} not above previous beta {self.beta[i - 1]:.6g}")
        return out


def lipschitz_estimate(f, p, domain, grid_n=201):
    """``(alpha, beta)`` bracketing ``|d f(p, a) / da|`` on ``domain``.

    The extremes of the analytic derivative over the grid are widened by 1%.
    The utilities are separable, so ``p`` does not enter.
    """
    if grid_n < 2:
        raise ConfigurationError("grid_n must be >= 2")
    lo, hi = (float(v) for v in domain)
    aa = np.linspace(lo, hi, grid_n)
    d = np.abs(np.asarray(f.d_accuracy(aa), float) + 0.0 * aa)
    return float(d.min() * (1 - WIDEN)), float(d.max() * (1 + WIDEN))


def profile_for(sol, grid_n=201):
    scn = sol.scenario
    lo = scn.family.accuracy_bounds[0]
    pairs = [
        lipschitz_estimate(f, p, (lo, A), grid_n)
        for f, p, A in zip(scn.family.members, sol.prices, scn.accuracies)
    ]
    return LipschitzProfile(tuple(a for a, _ in pairs), tuple(b for _, b in pairs))


@dataclass
class ErrorBoundReport:
    lower: list
    upper: list
    lower_case: list
    upper_case: list
    revenue: list
    sup_density: float
    notes: list = field(default_factory=list)

    def available(self, i):
        return self.revenue[i] is not None


def _ratio(num, den):
    return num / den if den > 0 else None


def _worst(values):
    if any(v is None for v in values):
        return None
    return max(values) if values else 0.0


def endpoint_error_bounds(sol, eps, prof=None):
    """Per-endpoint and per-revenue deviation bounds for a static solution.

    A bound is None ("unavailable") when it needs a denominator that the
    Lipschitz profile makes non-positive.
    """
    scn = sol.scenario
    n = scn.n
    eps = _per_model(eps, n)
    prof = profile_for(sol) if prof is None else prof
    al, be = prof.alpha, prof.beta
    lam = float(scn.dist.sup_density)
    act = [i for i in range(n) if sol.allocation.intervals[i] is not None]
    rep = ErrorBoundReport([None] * n, [None] * n, [None] * n, [None] * n, [None] * n, lam)
    rep.notes.extend(prof.violations())
    a_lo = scn.family.accuracy_bounds[0]
    for i in act:
        if not scn.family.members[i](sol.prices[i], a_lo) < 0:
            rep.notes.append(f"model {i + 1}: utility at the lowest accuracy is not negative")
    for i in act:
        below = [k for k in act if k < i]
        above = [k for k in act if k > i]
        kind = sol.lower[i][0] if sol.lower[i] else "support"
        zero = _ratio(eps[i], al[i])
        if kind in ("zero", "support"):
            lb = zero
        else:
            lb = _worst([zero] + [_ratio(eps[i] + eps[k], al[i] - be[k]) for k in below])
        ukind = sol.upper[i][0] if sol.upper[i] else "own"
        if ukind == "cross":
            j = sol.upper[i][1]
            # Same point as the lower end of model j, seen from either side.
            ub = _worst(
                [_ratio(eps[i] + eps[k], be[k] - al[i]) for k in above]
                + [_ratio(eps[i] + eps[j], al[j] - be[i])]
            )
        else:
            ub = _worst([_ratio(eps[i] + eps[k], be[k] - al[i]) for k in above])
        rep.lower[i], rep.upper[i] = lb, ub
        rep.lower_case[i], rep.upper_case[i] = kind, ukind
        if lb is not None and ub is not None:
            rep.revenue[i] = sol.prices[i] * lam * (lb + ub)
    return rep


def _per_model(eps, n):
    if np.ndim(eps) == 0:
        return [float(eps)] * n
    eps = [float(e) for e in eps]
    if len(eps) != n:
        raise ConfigurationError(f"{len(eps)} epsilons for {n} models")
    if any(e < 0 for e in eps):
        raise ConfigurationError("epsilons must be non-negative")
    return eps


@dataclass
class PerturbationResult:
    max_endpoint_deviation: float
    max_revenue_deviation: float
    satisfied: bool
    rows: list
    report: ErrorBoundReport
    spacing: float


PERTURBATIONS = ("offset", "slope")


def perturbed(f, delta, kind, a_max):
    """``f`` moved by at most ``|delta|`` in sup norm over accuracies up to ``a_max``."""
    if kind == "offset":
        return f.shifted(delta)
    scale = abs(float(f.accuracy_part(a_max)))
    if scale == 0:
        return f
    return replace(f, theta=f.theta * (1.0 + delta / scale))


def empirical_perturbation_test(sol, eps, trials=100, seed=0, grid_n=100_000, prof=None, kind="offset"):
    """Perturb every utility by ``|delta_i| <= eps_i`` and re-run buyers.

    With ``kind="offset"`` (default) the utilities move by constants; trial 0
    shifts every utility by ``+eps_i`` and later trials draw offsets
    uniformly. ``kind="slope"`` rescales the accuracy coefficient so the
    largest change over the buyer range is ``|delta_i|``. Deviations are
    measured between the oracle on the perturbed and on the modelled
    utilities at the original prices, so one grid spacing of
    discretization slack is allowed per endpoint.
    """
    if kind not in PERTURBATIONS:
        raise ConfigurationError(f"unknown perturbation {kind!r}")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    scn = sol.scenario
    n = scn.n
    eps = _per_model(eps, n)
    rep = endpoint_error_bounds(sol, eps, prof)
    rng = np.random.default_rng(seed)
    active = list(sol.active)
    base = oracle_allocate(sol.prices, scn.family, scn.accuracies, scn.dist, grid_n, active)
    h = base.spacing
    rows = []
    worst_end = worst_rev = 0.0
    ok = True
    for t in range(trials):
        delta = np.array(eps) if t == 0 else rng.uniform(-1.0, 1.0, n) * np.array(eps)
        fam = UtilityFamily(
            tuple(perturbed(f, float(d), kind, A) for f, d, A in zip(scn.family.members, delta, scn.accuracies)),
            scn.family.accuracy_bounds,
            scn.family.price_cap,
        )
        res = oracle_allocate(sol.prices, fam, scn.accuracies, scn.dist, grid_n, active)
        for i in range(n):
            e0, e1 = base.edges(i), res.edges(i)
            if e0 is None and e1 is None:
                continue
            if e0 is None or e1 is None:
                d_lo = d_hi = math.inf
            else:
                d_lo, d_hi = abs(e1[0] - e0[0]), abs(e1[1] - e0[1])
            d_rev = abs(res.revenues[i] - base.revenues[i])
            worst_end = max(worst_end, d_lo, d_hi)
            worst_rev = max(worst_rev, d_rev)
            lb, ub, rb = rep.lower[i], rep.upper[i], rep.revenue[i]
            slack = sol.prices[i] * rep.sup_density * 2 * h
            good = (
                (lb is None or d_lo <= lb + h)
                and (ub is None or d_hi <= ub + h)
                and (rb is None or d_rev <= rb + slack)
            )
            ok &= good
            rows.append((t, i, float(delta[i]), d_lo, d_hi, d_rev, lb, ub, rb, good))
    return PerturbationResult(worst_end, worst_rev, bool(ok), rows, rep, h)
