"""Uniform grids and sampled curves."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from ._validation import check_finite, check_positive, check_positive_int
from .exceptions import DomainError, GridMismatch, ParseError

__all__ = ["Grid", "DensityCurve", "product_weights"]

logger = logging.getLogger(__name__)

_NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``start + k * step`` for ``k = 0 .. count - 1``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        object.__setattr__(self, "start", check_finite(self.start, "grid start"))
        if self.start < 0:
            raise DomainError(f"grid start must be >= 0, got {self.start}")
        object.__setattr__(self, "step", check_positive(self.step, "grid step"))
        object.__setattr__(self, "count", check_positive_int(self.count, "grid count"))

    @classmethod
    def parse(cls, text):
        """Parse ``"start:step:count"``."""
        parts = str(text).split(":")
        if len(parts) != 3:
            raise ParseError(f"grid must look like start:step:count, got {text!r}")
        try:
            start, step = float(parts[0]), float(parts[1])
            count = int(parts[2])
        except ValueError as exc:
            raise ParseError(f"bad grid {text!r}: {exc}") from None
        return cls(start, step, count)

    def points(self):
        return self.start + self.step * np.arange(self.count)

    @property
    def stop(self):
        return self.start + self.step * (self.count - 1)


@dataclass(frozen=True)
class DensityCurve:
    """A nonnegative function sampled on a uniform grid.

    Parameters
    ----------
    grid_start, grid_step : float
        Location of the first node and node spacing.
    values : ndarray
        Samples at the nodes.  Entries in ``[-tol, 0)`` with
        ``tol = 1e-12 * max(1, max |values|)`` are clamped to zero with a
        logged warning; anything more negative is rejected.
    atom : float
        Point mass sitting at ``grid_start``.
    exponent : float
        Power-law order ``e`` of an integrable singularity at ``grid_start``
        (values behave like ``(x - grid_start) ** -e``); ``values[0]`` is
        ``inf`` when ``e > 0``.
    tail_mass : float
        Analytic mass to the right of the last node.
    """

    grid_start: float
    grid_step: float
    values: np.ndarray
    atom: float = 0.0
    exponent: float = 0.0
    tail_mass: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        check_finite(self.grid_start, "grid_start")
        check_positive(self.grid_step, "grid_step")
        if not 0.0 <= self.exponent < 1.0:
            raise DomainError(f"singularity exponent must lie in [0, 1), got {self.exponent}")
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("values must be a non-empty one-dimensional array")
        body = values[1:] if self.exponent > 0 else values
        if np.any(np.isnan(values)) or np.any(np.isinf(body)):
            raise DomainError("density values must be finite away from a declared singularity")
        finite = values[np.isfinite(values)]
        tol = _NEGATIVE_TOL * max(1.0, float(np.max(np.abs(finite))) if finite.size else 1.0)
        if np.any(values < -tol):
            worst = float(values.min())
            raise DomainError(f"density has a negative value {worst:.3e} beyond tolerance {tol:.1e}")
        negative = values < 0
        if np.any(negative):
            logger.warning(
                "clamping %d slightly negative density values (min %.3e)",
                int(negative.sum()),
                float(values.min()),
            )
            values[negative] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def grid(self):
        return Grid(self.grid_start, self.grid_step, len(self.values))

    def points(self):
        return self.grid_start + self.grid_step * np.arange(len(self.values))

    def smooth_part(self):
        """Values multiplied by ``(x - start) ** exponent``, finite at the first node."""
        return _regular_factor(self.values, self.grid_step, self.exponent)

    def cumulative(self):
        """Running integral from ``grid_start`` to each node, atom included."""
        n = len(self.values)
        if n == 1:
            return np.array([self.atom])
        phi = self.smooth_part()
        left, right = _single_weights(n, self.exponent)
        scale = self.grid_step ** (1.0 - self.exponent)
        cells = scale * (left * phi[:-1] + right * phi[1:])
        return self.atom + np.concatenate([[0.0], np.cumsum(cells)])

    def integral(self):
        """Total mass on the grid plus atom plus declared tail mass."""
        return float(self.cumulative()[-1]) + self.tail_mass

    def mean(self):
        """First moment over the grid, atom included and tail mass excluded."""
        x = self.points()
        with np.errstate(invalid="ignore"):
            vals = x * self.values
        exponent = self.exponent
        if exponent > 0:
            if self.grid_start == 0.0:
                # x * x**-e vanishes at the origin, so the product is regular there
                vals[0] = 0.0
                exponent = 0.0
            else:
                vals[0] = np.inf
        moment = replace(self, values=vals, atom=0.0, exponent=exponent, tail_mass=0.0)
        return float(moment.cumulative()[-1]) + self.atom * self.grid_start

    def value_at(self, index):
        return float(self.values[index])

    def with_values(self, values, **changes):
        return replace(self, values=values, **changes)


def _regular_factor(values, step, exponent):
    values = np.asarray(values, dtype=float)
    if exponent == 0.0:
        return values.copy()
    n = len(values)
    tau = step * np.arange(n)
    phi = np.empty(n)
    phi[1:] = values[1:] * tau[1:] ** exponent
    if n >= 3:
        phi[0] = 2.0 * phi[1] - phi[2]
    elif n == 2:
        phi[0] = phi[1]
    else:
        phi[0] = 0.0
    return phi


@lru_cache(maxsize=16)
def _single_weights(n, exponent):
    """Product-trapezoid cell weights for ``x**-e * phi(x)`` on unit cells."""
    j = np.arange(n - 1, dtype=float)
    if exponent == 0.0:
        half = np.full(n - 1, 0.5)
        return half, half
    a = 1.0 - exponent
    m0 = ((j + 1) ** a - j**a) / a
    m1 = ((j + 1) ** (a + 1) - j ** (a + 1)) / (a + 1)
    left = (j + 1) * m0 - m1
    right = m1 - j * m0
    return left, right


@lru_cache(maxsize=8)
def product_weights(n, e1, e2):
    """Node weights for ``int_0^k tau**-e1 (k - tau)**-e2 Phi(tau) dtau`` on unit cells.

    Row ``k`` holds the weights of nodes ``0 .. k`` for the output node ``k``
    (zeros elsewhere), with ``Phi`` interpolated linearly on each cell.  The
    kernel moments on each cell come from the regularized incomplete beta
    function, so both endpoint singularities are integrated exactly.
    """
    weights = np.zeros((n, n))
    a1, a2 = 1.0 - e1, 1.0 - e2
    beta0 = _sp.beta(a1, a2)
    beta1 = _sp.beta(a1 + 1.0, a2)
    for k in range(1, n):
        edges = np.arange(k + 1, dtype=float) / k
        i0 = _sp.betainc(a1, a2, edges)
        i1 = _sp.betainc(a1 + 1.0, a2, edges)
        m0 = k ** (a1 + a2 - 1.0) * beta0 * np.diff(i0)
        m1 = k ** (a1 + a2) * beta1 * np.diff(i1)
        j = np.arange(k, dtype=float)
        left = (j + 1.0) * m0 - m1
        right = m1 - j * m0
        weights[k, :k] += left
        weights[k, 1 : k + 1] += right
    weights.setflags(write=False)
    return weights


def same_grid(f, g):
    if len(f.values) != len(g.values) or not math.isclose(f.grid_step, g.grid_step, rel_tol=1e-12) or not math.isclose(
        f.grid_start, g.grid_start, rel_tol=1e-12, abs_tol=1e-15
    ):
        raise GridMismatch(
            f"grids differ: ({f.grid_start}, {f.grid_step}, {len(f.values)}) vs "
            f"({g.grid_start}, {g.grid_step}, {len(g.values)})"
        )
