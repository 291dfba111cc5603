"""Small argument-checking helpers."""

from __future__ import annotations

import math
from numbers import Real

import numpy as np

from .exceptions import DomainError


def check_positive(value, name, *, strict=True):
    if not isinstance(value, Real) or not math.isfinite(value):
        raise DomainError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise DomainError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise DomainError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_finite(value, name):
    if not isinstance(value, Real) or not math.isfinite(value):
        raise DomainError(f"{name} must be a finite real number, got {value!r}")
    return float(value)


def check_open_unit(value, name):
    value = check_finite(value, name)
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def as_1d_float(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr
