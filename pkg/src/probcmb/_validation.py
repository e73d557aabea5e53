"""Small argument checks shared by the public functions."""

import numpy as np

from .exceptions import DomainError


def check_positive(value, name, allow_zero=False):
    """Return ``value`` as float (or float array) after a positivity check."""
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    bad = arr < 0 if allow_zero else arr <= 0
    if np.any(bad):
        bound = "non-negative" if allow_zero else "positive"
        raise DomainError(f"{name} must be {bound}, got {value!r}")
    return float(arr) if arr.ndim == 0 else arr


def check_probability(p, name="p", closed=False):
    arr = np.asarray(p, dtype=float)
    if closed:
        ok = (arr >= 0) & (arr <= 1)
    else:
        ok = (arr > 0) & (arr < 1)
    if not np.all(ok):
        interval = "[0, 1]" if closed else "(0, 1)"
        raise DomainError(f"{name} must lie in {interval}, got {p!r}")
    return float(arr) if arr.ndim == 0 else arr


def as_float_array(x, name, ndim=1):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 and ndim == 1:
        arr = arr.reshape(1)
    if arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr
