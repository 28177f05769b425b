"""Utility-function grammar, evaluation, root finding and axiom checks.

A utility is additively separable,
``b(p, a) = accuracy_term(a) + price_term(p) + offset``, where the accuracy
term is increasing and the price term decreasing. Both terms come from a small
closed set of forms so that derivatives and inverses are available in closed
form.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from ._numeric import bisect
from .exceptions import CompatibilityViolation, ConfigurationError, DomainError

ACCURACY_FORMS = ("linear", "power", "log")
PRICE_FORMS = ("linear", "quadratic", "log")

# Strict ordering b_i < b_j is only checked above this offset from A_lo.
ORDER_MARGIN = 1e-9
# Differences smaller than this count as zero in sign-pattern scans.
SIGN_EPS = 1e-12


def _is_scalar(x):
    return isinstance(x, (float, int)) or np.ndim(x) == 0


def _log1p(x):
    return math.log1p(float(x)) if _is_scalar(x) else np.log1p(x)


def _exp(x):
    return math.exp(float(x)) if _is_scalar(x) else np.exp(x)


def _pow(x, q):
    if _is_scalar(x):
        x = float(x)
        return x ** q if x >= 0.0 else math.nan
    x = np.asarray(x, float)
    with np.errstate(invalid="ignore"):
        return np.where(x >= 0.0, np.abs(x) ** q, np.nan)


def term_value(form, coef, q, x):
    """Evaluate ``coef * g(x)`` for one of the grammar's shape functions."""
    if form == "linear":
        return coef * x
    if form in ("power", "quadratic"):
        return coef * _pow(x, 2.0 if form == "quadratic" else q)
    if form == "log":
        return coef * _log1p(x)
    raise ConfigurationError(f"unknown form {form!r}")


def term_derivative(form, coef, q, x):
    if form == "linear":
        return coef + 0.0 * x
    if form == "quadratic":
        return 2.0 * coef * x
    if form == "power":
        return coef * q * _pow(x, q - 1.0)
    if form == "log":
        return coef / (1.0 + x)
    raise ConfigurationError(f"unknown form {form!r}")


def term_inverse(form, coef, q, y):
    """Solve ``coef * g(x) = y`` for ``x >= 0``; NaN where no solution exists."""
    t = y / coef
    if form == "linear":
        return t
    if form in ("power", "quadratic"):
        return _pow(t, 1.0 / (2.0 if form == "quadratic" else q))
    if form == "log":
        return _exp(t) - 1.0
    raise ConfigurationError(f"unknown form {form!r}")


@dataclass(frozen=True)
class UtilityFunction:
    """Buyer utility ``theta*h(a) - phi*g(p) + offset`` for one model."""

    accuracy_form: str = "linear"
    theta: float = 1.0
    price_form: str = "linear"
    phi: float = 1.0
    offset: float = 0.0
    q: float = 1.0

    def __post_init__(self):
        if self.accuracy_form not in ACCURACY_FORMS:
            raise ConfigurationError(f"unknown accuracy form {self.accuracy_form!r}")
        if self.price_form not in PRICE_FORMS:
            raise ConfigurationError(f"unknown price form {self.price_form!r}")
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")
        if not self.phi > 0:
            raise ConfigurationError("phi must be positive")
        if self.accuracy_form == "power" and not self.q > 0:
            raise ConfigurationError("power exponent q must be positive")

    def accuracy_part(self, a):
        return term_value(self.accuracy_form, self.theta, self.q, a)

    def price_part(self, p):
        return -term_value(self.price_form, self.phi, 1.0, p) + self.offset

    def __call__(self, p, a):
        return self.accuracy_part(a) + self.price_part(p)

    def d_accuracy(self, a):
        return term_derivative(self.accuracy_form, self.theta, self.q, a)

    def d_price(self, p):
        return -term_derivative(self.price_form, self.phi, 1.0, p)

    def accuracy_inverse(self, y):
        """Accuracy at which the accuracy term equals ``y`` (NaN if none)."""
        return term_inverse(self.accuracy_form, self.theta, self.q, y)

    def price_inverse(self, y):
        """Price at which ``price_part(p) == y`` (NaN if none)."""
        return term_inverse(self.price_form, self.phi, 1.0, self.offset - y)

    def shifted(self, delta):
        """Copy with the constant offset moved by ``delta``."""
        return replace(self, offset=self.offset + delta)

    def to_dict(self):
        d = {
            "accuracy_form": self.accuracy_form,
            "theta": self.theta,
            "price_form": self.price_form,
            "phi": self.phi,
            "offset": self.offset,
        }
        if self.accuracy_form == "power":
            d["q"] = self.q
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            accuracy_form=d.get("accuracy_form", "linear"),
            theta=float(d.get("theta", 1.0)),
            price_form=d.get("price_form", "linear"),
            phi=float(d.get("phi", 1.0)),
            offset=float(d.get("offset", 0.0)),
            q=float(d.get("q", 1.0)),
        )


@dataclass(frozen=True)
class UtilityFamily:
    members: tuple
    accuracy_bounds: tuple = (0.0, 1.0)
    price_cap: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        lo, hi = (float(v) for v in self.accuracy_bounds)
        object.__setattr__(self, "accuracy_bounds", (lo, hi))
        if not self.members:
            raise ConfigurationError("a family needs at least one member")
        if not lo < hi:
            raise ConfigurationError("accuracy bounds must satisfy A_lo < A_hi")
        if self.price_cap < 0:
            raise ConfigurationError("price cap must be non-negative")
        for i, f in enumerate(self.members):
            if f.accuracy_form in ("power", "log") and lo < 0:
                raise ConfigurationError(
                    f"member {i}: {f.accuracy_form} form needs A_lo >= 0"
                )

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def __iter__(self):
        return iter(self.members)


@dataclass
class CompatibilityReport:
    passed: bool = True
    violations: list = field(default_factory=list)

    def add(self, i, j, p, p2, a, description):
        self.violations.append((i, j, float(p), float(p2), float(a), description))
        self.passed = False

    def __bool__(self):
        return self.passed


def evaluate(f, p, a, price_cap=None, accuracy_bounds=None):
    """Evaluate ``f`` at ``(p, a)``, rejecting arguments outside the domain."""
    p = float(p)
    a = float(a)
    if p < 0 or (price_cap is not None and p > price_cap):
        raise DomainError(f"price {p} outside [0, {price_cap}]")
    if accuracy_bounds is not None:
        lo, hi = accuracy_bounds
        if not lo <= a <= hi:
            raise DomainError(f"accuracy {a} outside [{lo}, {hi}]")
    if f.accuracy_form == "power" and a < 0:
        raise DomainError("power form undefined for negative accuracy")
    if f.accuracy_form == "log" and a <= -1:
        raise DomainError("log form undefined for accuracy <= -1")
    v = f(p, a)
    if not math.isfinite(v):
        raise DomainError(f"utility not finite at ({p}, {a})")
    return v


def marginal_accuracy(f, p, lo, hi):
    """Lower edge of ``{a in [lo, hi] : f(p, a) >= 0}``.

    Returns ``lo`` when the whole domain has non-negative utility and NaN when
    none of it does. Vectorized over ``p``.
    """
    g_lo = f(p, lo)
    g_hi = f(p, hi)
    need = (g_lo < 0) & (g_hi >= 0)
    out = np.where(g_lo >= 0, lo, np.where(g_hi < 0, np.nan, hi))
    if np.any(need):
        root = bisect(lambda a: f(p, a), lo + 0.0 * np.asarray(p), hi + 0.0 * np.asarray(p))
        out = np.where(need, root, out)
    return float(out) if _is_scalar(out) else out


def zero_accuracy(f, p, domain):
    """Accuracy ``a'`` in ``domain`` with ``f(p, a') = 0``, or None.

    None covers both degenerate cases: utility positive everywhere on the
    domain and utility negative everywhere.
    """
    lo, hi = (float(v) for v in domain)
    if lo > hi:
        raise DomainError("empty accuracy domain")
    g_lo = f(float(p), lo)
    g_hi = f(float(p), hi)
    if g_lo > 0 or g_hi < 0:
        return None
    return bisect(lambda a: f(float(p), a), lo, hi)


def check_axioms(fam, grid_n=201, accuracies=None):
    """Lattice certification of monotonicity and ordering of a family.

    ``accuracies`` optionally restricts the increasing-in-accuracy check of
    member ``i`` to ``[A_lo, A_i]``.
    """
    if grid_n < 2:
        raise DomainError("grid_n must be >= 2")
    lo, hi = fam.accuracy_bounds
    ps = np.linspace(0.0, fam.price_cap, grid_n)
    aa = np.linspace(lo, hi, grid_n)
    P, A = np.meshgrid(ps, aa, indexing="ij")
    report = CompatibilityReport()
    values = []
    for i, f in enumerate(fam.members):
        V = f(P, A)
        values.append(V)
        if fam.price_cap > 0:
            bad = np.argwhere(~(np.diff(V, axis=0) < 0))
            for r, c in bad:
                report.add(i, i, ps[r], ps[r + 1], aa[c], "not strictly decreasing in price")
        top = hi if accuracies is None else accuracies[i]
        dA = np.diff(V, axis=1)
        bad = np.argwhere(~(dA > 0) & (aa[1:][None, :] <= top))
        for r, c in bad:
            report.add(i, i, ps[r], ps[r], aa[c + 1], "not strictly increasing in accuracy")
    cols = aa > lo + ORDER_MARGIN
    for i in range(len(values) - 1):
        for j in range(i + 1, len(values)):
            bad = np.argwhere(~(values[i] < values[j]) & cols[None, :])
            for r, c in bad:
                report.add(i, j, ps[r], ps[r], aa[c], "ordering b_i < b_j violated")
    return report


def sign_pattern_violations(B, mask):
    """Rows of ``B`` whose masked signs are not a single ``+ -> -`` change.

    Returns ``(bad_rows, column_of_first_bad_change, reason)`` arrays.
    """
    s = np.where(mask & (np.abs(B) > SIGN_EPS), np.sign(B), 0.0)
    n = s.shape[-1]
    idx = np.where(s != 0, np.arange(n), -1)
    idx = np.maximum.accumulate(idx, axis=-1)
    filled = np.where(idx >= 0, np.take_along_axis(s, np.maximum(idx, 0), axis=-1), 0.0)
    prev, nxt = filled[..., :-1], filled[..., 1:]
    change = (prev != 0) & (nxt != 0) & (prev != nxt)
    up = change & (prev < 0)
    count = change.sum(axis=-1)
    bad = (count > 1) | up.any(axis=-1)
    first = np.argmax(up | change, axis=-1) + 1
    return bad, first, np.where(up.any(axis=-1), "sign change - to +", "multiple sign changes")


def check_accuracy_compatibility(fam, grid_n=201, accuracies=None):
    """Verify the single ``+ -> -`` sign change of ``b_i(p,.) - b_j(p',.)``.

    The scan runs over every ``(p, p')`` lattice pair and an accuracy grid
    restricted to the region where both utilities are non-negative. A
    lattice of prices can step over narrow windows where the pattern fails,
    so every lower price is also paired with each ``p'`` at which the two
    utilities tie exactly at a grid accuracy.
    """
    if grid_n < 3:
        raise DomainError("grid_n must be >= 3")
    lo, hi = fam.accuracy_bounds
    ps = np.linspace(0.0, fam.price_cap, grid_n)
    aa = np.linspace(lo, hi, grid_n)
    report = CompatibilityReport()
    n = len(fam.members)
    tops = [hi] * n if accuracies is None else list(accuracies)
    for i in range(n - 1):
        bi_all = fam.members[i](ps[:, None], aa[None, :])
        for j in range(i + 1, n):
            bj_all = fam.members[j](ps[:, None], aa[None, :])
            dom_j = (bj_all >= 0) & (aa[None, :] <= tops[j])
            for r in range(grid_n):
                bi = bi_all[r][None, :]
                mask = (bi >= 0) & (aa[None, :] <= tops[i]) & dom_j
                bad, col, why = sign_pattern_violations(bi - bj_all, mask)
                for c in np.flatnonzero(bad):
                    report.add(i, j, ps[r], ps[c], aa[min(col[c], grid_n - 1)], str(why[c]))
                _tie_pairs(fam, i, j, ps[r], aa, tops, report)
    return report


def _tie_pairs(fam, i, j, p, aa, tops, report):
    fi, fj = fam.members[i], fam.members[j]
    ok_a = (aa <= tops[i]) & (aa <= tops[j])
    bi = fi(p, aa)
    with np.errstate(all="ignore"):
        tie = np.asarray(fj.price_inverse(bi - fj.accuracy_part(aa)), float)
    keep = ok_a & (bi >= 0) & np.isfinite(tie) & (tie >= 0) & (tie <= fam.price_cap)
    if not keep.any():
        return
    pj = tie[keep]
    bj = fj(pj[:, None], aa[None, :])
    mask = (bi[None, :] >= 0) & (bj >= 0) & (aa[None, :] <= tops[i]) & (aa[None, :] <= tops[j])
    bad, col, why = sign_pattern_violations(bi[None, :] - bj, mask)
    for c in np.flatnonzero(bad):
        report.add(i, j, p, float(pj[c]), aa[min(col[c], len(aa) - 1)], str(why[c]))


def crossing_with_envelope(f, p, env, grid_n=10_000):
    """Unique accuracy where ``f(p, .)`` meets the envelope on its support.

    Raises :class:`CompatibilityViolation` if the difference changes sign more
    than once over the support.
    """
    p = float(p)
    pieces = [pc for pc in env.pieces if pc.hi > pc.lo]
    if not pieces:
        return None
    total = sum(pc.hi - pc.lo for pc in pieces)
    signs = []
    crossing = None
    for pc in pieces:
        k = max(16, int(grid_n * (pc.hi - pc.lo) / total))
        aa = np.linspace(pc.lo, pc.hi, k + 1)[1:]
        d = f(p, aa) - pc.utility(pc.price, aa)
        s = np.where(np.abs(d) > SIGN_EPS, np.sign(d), 0.0)
        nz = np.flatnonzero(s)
        for t in range(1, len(nz)):
            if s[nz[t]] != s[nz[t - 1]] and crossing is None:
                a0, a1 = aa[nz[t - 1]], aa[nz[t]]
                crossing = bisect(lambda a, pc=pc: f(p, a) - pc.utility(pc.price, a), a0, a1)
        signs.extend(s[nz].tolist())
        if len(nz) < len(s) and crossing is None:
            zero = aa[np.flatnonzero(s == 0)[0]]
            crossing = float(zero)
    changes = sum(1 for u, v in zip(signs, signs[1:]) if u != v)
    if changes > 1:
        raise CompatibilityViolation(
            f"utility meets the envelope {changes} times at price {p}"
        )
    return crossing
