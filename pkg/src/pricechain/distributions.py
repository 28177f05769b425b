"""Buyer distributions with closed-form CDFs.

Densities are market-mass weights: they integrate to ``total_mass`` rather
than to one.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import ndtr

from .exceptions import ConfigurationError


class BuyerDistribution:
    kind = "abstract"
    lo: float
    hi: float

    @property
    def support(self):
        return (self.lo, self.hi)

    def _clip(self, x):
        if np.ndim(x) == 0:
            return min(max(float(x), self.lo), self.hi)
        return np.clip(x, self.lo, self.hi)

    def interval_mass(self, lo, hi):
        """``F(hi) - F(lo)`` clamped at zero; vectorized."""
        m = self.cdf(hi) - self.cdf(lo)
        return max(m, 0.0) if np.ndim(m) == 0 else np.maximum(m, 0.0)

    def breakpoints(self):
        """Points where the density is not smooth."""
        return (self.lo, self.hi)

    @classmethod
    def from_dict(cls, d):
        kind = d.get("type")
        try:
            ctor = _KINDS[kind]
        except KeyError:
            raise ConfigurationError(f"unknown distribution type {kind!r}") from None
        return ctor._from_dict(d)


@dataclass(frozen=True)
class Uniform(BuyerDistribution):
    lo: float = 0.0
    hi: float = 1.0
    mass: float = None

    kind = "uniform"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigurationError("uniform support needs lo < hi")
        if self.mass is None:
            object.__setattr__(self, "mass", self.hi - self.lo)
        if not self.mass >= 0:
            raise ConfigurationError("mass must be non-negative")

    @property
    def total_mass(self):
        return self.mass

    @property
    def density(self):
        return self.mass / (self.hi - self.lo)

    @property
    def sup_density(self):
        return self.density

    def pdf(self, x):
        if np.ndim(x) == 0:
            return self.density if self.lo <= x <= self.hi else 0.0
        x = np.asarray(x, float)
        return np.where((x >= self.lo) & (x <= self.hi), self.density, 0.0)

    def cdf(self, x):
        return (self._clip(x) - self.lo) * self.density

    def to_dict(self):
        return {"type": "uniform", "lo": self.lo, "hi": self.hi, "mass": self.mass}

    @classmethod
    def _from_dict(cls, d):
        mass = d.get("mass")
        return cls(float(d["lo"]), float(d["hi"]), None if mass is None else float(mass))


@dataclass(frozen=True)
class PiecewiseLinear(BuyerDistribution):
    """Density interpolated linearly between ``knots`` ``(x, y)``."""

    knots: tuple = ((0.0, 1.0), (1.0, 1.0))
    mass: float = None

    kind = "piecewise-linear"

    def __post_init__(self):
        xs = np.array([k[0] for k in self.knots], float)
        ys = np.array([k[1] for k in self.knots], float)
        if len(xs) < 2 or np.any(np.diff(xs) <= 0):
            raise ConfigurationError("knots need >= 2 strictly increasing x values")
        if np.any(ys < 0):
            raise ConfigurationError("density knots must be non-negative")
        area = float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))
        if area <= 0:
            raise ConfigurationError("density integrates to zero")
        if self.mass is not None:
            ys = ys * (self.mass / area)
        else:
            object.__setattr__(self, "mass", area)
        object.__setattr__(self, "knots", tuple(zip(xs.tolist(), ys.tolist())))
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_ys", ys)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs))))
        object.__setattr__(self, "_cum", cum)

    @property
    def lo(self):
        return float(self._xs[0])

    @property
    def hi(self):
        return float(self._xs[-1])

    @property
    def total_mass(self):
        return self.mass

    @property
    def sup_density(self):
        return float(self._ys.max())

    def pdf(self, x):
        v = np.interp(x, self._xs, self._ys, left=0.0, right=0.0)
        return float(v) if np.ndim(x) == 0 else v

    def cdf(self, x):
        xs, ys, cum = self._xs, self._ys, self._cum
        x = self._clip(x)
        k = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        w = xs[k + 1] - xs[k]
        t = x - xs[k]
        v = cum[k] + ys[k] * t + (ys[k + 1] - ys[k]) * t * t / (2.0 * w)
        return float(v) if np.ndim(x) == 0 else v

    def breakpoints(self):
        return tuple(self._xs.tolist())

    def to_dict(self):
        return {"type": "piecewise-linear", "knots": [list(k) for k in self.knots], "mass": self.mass}

    @classmethod
    def _from_dict(cls, d):
        mass = d.get("mass")
        return cls(tuple(tuple(map(float, k)) for k in d["knots"]), None if mass is None else float(mass))


@dataclass(frozen=True)
class TruncatedNormal(BuyerDistribution):
    mean: float = 0.5
    sd: float = 0.2
    lo: float = 0.0
    hi: float = 1.0
    mass: float = 1.0

    kind = "truncated-normal"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigurationError("truncated-normal support needs lo < hi")
        if not self.sd > 0:
            raise ConfigurationError("sd must be positive")
        za = _ndtr((self.lo - self.mean) / self.sd)
        zb = _ndtr((self.hi - self.mean) / self.sd)
        if zb - za <= 0:
            raise ConfigurationError("truncation window carries no probability")
        object.__setattr__(self, "_za", za)
        object.__setattr__(self, "_z", zb - za)

    @property
    def total_mass(self):
        return self.mass

    @property
    def sup_density(self):
        return self.pdf(min(max(self.mean, self.lo), self.hi))

    def pdf(self, x):
        scale = self.mass / (self.sd * self._z * math.sqrt(2.0 * math.pi))
        if np.ndim(x) == 0:
            if not self.lo <= x <= self.hi:
                return 0.0
            return scale * math.exp(-0.5 * ((x - self.mean) / self.sd) ** 2)
        x = np.asarray(x, float)
        v = scale * np.exp(-0.5 * ((x - self.mean) / self.sd) ** 2)
        return np.where((x >= self.lo) & (x <= self.hi), v, 0.0)

    def cdf(self, x):
        x = self._clip(x)
        return self.mass * (_ndtr((x - self.mean) / self.sd) - self._za) / self._z

    def to_dict(self):
        return {
            "type": "truncated-normal",
            "mean": self.mean,
            "sd": self.sd,
            "lo": self.lo,
            "hi": self.hi,
            "mass": self.mass,
        }

    @classmethod
    def _from_dict(cls, d):
        return cls(
            float(d["mean"]), float(d["sd"]), float(d["lo"]), float(d["hi"]), float(d.get("mass", 1.0))
        )


def _ndtr(z):
    if np.ndim(z) == 0:
        return 0.5 * math.erfc(-float(z) / math.sqrt(2.0))
    return ndtr(z)


_KINDS = {
    "uniform": Uniform,
    "piecewise-linear": PiecewiseLinear,
    "truncated-normal": TruncatedNormal,
}
