"""Argument checks shared by the estimators and the CLI."""

import math

import numpy as np

from .exceptions import ConfigurationError, DomainError


def check_price_vector(prices, n, price_cap=None, allow_none=False):
    """Return ``prices`` as a list of floats of length ``n`` inside ``[0, cap]``."""
    if len(prices) != n:
        raise ConfigurationError(f"expected {n} prices, got {len(prices)}")
    out = []
    for i, p in enumerate(prices):
        if p is None and allow_none:
            out.append(None)
            continue
        p = float(p)
        if not math.isfinite(p) or p < 0:
            raise DomainError(f"price {i + 1} must be a finite non-negative number")
        if price_cap is not None and p > price_cap + 1e-12:
            raise DomainError(f"price {i + 1} = {p} exceeds the cap {price_cap}")
        out.append(p)
    return out


def check_accuracy_array(a, bounds=None):
    """1-D float array of buyer accuracies, optionally inside ``bounds``."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim != 1:
        raise DomainError("buyer accuracies must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DomainError("buyer accuracies must be finite")
    if bounds is not None and np.any((arr < bounds[0]) | (arr > bounds[1])):
        raise DomainError(f"buyer accuracies must lie in [{bounds[0]}, {bounds[1]}]")
    return arr


def check_positive_int(value, name, minimum=1):
    if int(value) != value or value < minimum:
        raise ConfigurationError(f"{name} must be an integer >= {minimum}")
    return int(value)


def check_epsilon(eps, n):
    if np.ndim(eps) == 0:
        eps = [float(eps)] * n
    eps = [float(e) for e in eps]
    if len(eps) != n:
        raise ConfigurationError(f"{len(eps)} epsilons for {n} models")
    if any(not math.isfinite(e) or e < 0 for e in eps):
        raise ConfigurationError("epsilons must be finite and non-negative")
    return eps
