"""Laplace-transform machinery.

Two independent numerical inverters (Gaver-Stehfest on the real axis and
the fixed-parameter modified Talbot contour), an adaptive forward
transform with an explicit tail bound, the exit-density and moment
transforms of a subordinator, and a corpus of known transform pairs used
to validate the inverters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate
from scipy import special as _sp

from . import specfun
from ._validation import check_positive
from .exceptions import DomainError, NumericalBlowup, TailUnbounded
from .grids import DensityCurve, Grid

__all__ = [
    "TransformFn",
    "InversionMethod",
    "InversionSettings",
    "ForwardResult",
    "KnownPair",
    "forward",
    "invert",
    "invert_values",
    "gaver_stehfest",
    "talbot",
    "inversion_nodes",
    "combine_nodes",
    "exit_density_transform",
    "exit_cdf_transform",
    "moment_transform",
    "shift_scale",
    "negative_derivative",
    "divide_by_s",
    "multiply_by_s",
    "known_pairs",
]


@dataclass(frozen=True)
class TransformFn:
    """A Laplace transform ``F(s)`` analytic for ``Re(s) > abscissa``.

    ``evaluator`` must accept complex numpy arrays and return an array of
    the same shape.  A few spot probes right of the abscissa are evaluated
    at construction and must be finite.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    abscissa: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if not math.isfinite(self.abscissa):
            raise DomainError("transform abscissa must be finite")
        probes = self.abscissa + np.array([0.5, 1.0 + 1.0j, 1.0 - 2.0j, 7.0])
        with np.errstate(all="ignore"):
            values = np.asarray(self.evaluator(probes), dtype=complex)
        if values.shape != probes.shape or not np.all(np.isfinite(values)):
            raise DomainError(f"transform {self.label or self.evaluator!r} is not finite right of its abscissa")

    def __call__(self, s):
        return self.evaluator(np.asarray(s, dtype=complex))


class InversionMethod(str, enum.Enum):
    GAVER_STEHFEST = "gs"
    TALBOT = "talbot"


_ORDER_RANGE = {
    InversionMethod.GAVER_STEHFEST: (8, 18),
    InversionMethod.TALBOT: (16, 64),
}
_DEFAULT_ORDER = {InversionMethod.GAVER_STEHFEST: 14, InversionMethod.TALBOT: 32}


@dataclass(frozen=True)
class InversionSettings:
    """Inverter choice, node count and evaluation grid.

    Gaver-Stehfest orders are even and lie in ``[8, 18]``; Talbot node
    counts lie in ``[16, 64]``.
    """

    method: InversionMethod = InversionMethod.TALBOT
    order: int | None = None
    grid: Grid | None = None

    def __post_init__(self):
        method = InversionMethod(self.method)
        object.__setattr__(self, "method", method)
        order = _DEFAULT_ORDER[method] if self.order is None else self.order
        if isinstance(order, bool) or not isinstance(order, (int, np.integer)):
            raise DomainError(f"inversion order must be an integer, got {order!r}")
        lo, hi = _ORDER_RANGE[method]
        if not lo <= order <= hi:
            raise DomainError(f"{method.value} order must lie in [{lo}, {hi}], got {order}")
        if method is InversionMethod.GAVER_STEHFEST and order % 2:
            raise DomainError(f"Gaver-Stehfest order must be even, got {order}")
        object.__setattr__(self, "order", int(order))
        if self.grid is not None and self.grid.start <= 0.0:
            raise DomainError("inversion grid must be strictly positive")


class ForwardResult(NamedTuple):
    value: complex
    error: float


# ---------------------------------------------------------------------------
# inversion

@lru_cache(maxsize=None)
def _stehfest_weights(order):
    half = order // 2
    weights = []
    for k in range(1, order + 1):
        total = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            total += Fraction(
                j**half * math.factorial(2 * j),
                math.factorial(half - j)
                * math.factorial(j)
                * math.factorial(j - 1)
                * math.factorial(k - j)
                * math.factorial(2 * j - k),
            )
        weights.append(float((-1) ** (k + half) * total))
    return np.array(weights)


def _check_points(t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise DomainError("inversion points must be positive and finite")
    return t


def _stehfest_nodes(t, order):
    ln2 = math.log(2.0)
    k = np.arange(1, order + 1)
    z = ((ln2 / t)[:, None] * k[None, :]).astype(complex)
    w = (ln2 / t)[:, None] * _stehfest_weights(order)[None, :]
    return z, w.astype(complex)


# fixed modified-contour parameters
_TALBOT_A = -0.6122
_TALBOT_B = 0.5017
_TALBOT_C = 0.6407
_TALBOT_D = 0.2645


def _talbot_nodes(t, order, shift):
    n = order
    # nodes are symmetric about 0, so the upper half suffices for real f
    theta = -np.pi + (np.arange(n // 2, n) + 0.5) * 2.0 * np.pi / n
    ct = theta * _TALBOT_C
    cot = np.cos(ct) / np.sin(ct)
    scale = (n / t)[:, None]
    z = shift + scale * (_TALBOT_A + _TALBOT_B * theta * cot + 1j * _TALBOT_D * theta)[None, :]
    dz = scale * (_TALBOT_B * cot - _TALBOT_B * ct / np.sin(ct) ** 2 + 1j * _TALBOT_D)[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.exp(z * t[:, None]) * dz * (2.0 / (1j * n))
    return z, w


def inversion_nodes(t, method=InversionMethod.TALBOT, order=None, shift=0.0):
    """Nodes ``z`` and weights ``w`` with ``f(t) ~ Re(sum_k w_k F(z_k))``.

    Both arrays have shape ``(len(t), K)``.  ``shift`` is only used by the
    Talbot contour.
    """
    settings = InversionSettings(method=method, order=order)
    t = _check_points(t)
    if settings.method is InversionMethod.GAVER_STEHFEST:
        return _stehfest_nodes(t, settings.order)
    return _talbot_nodes(t, settings.order, shift)


def combine_nodes(values, weights, method=InversionMethod.TALBOT, reference=None):
    """Apply inversion weights along the last axis, checking for cancellation.

    Parameters
    ----------
    reference : float, optional
        Scale against which cancellation is judged.  By default each sum is
        judged against itself, which flags legitimately tiny values; a
        caller inverting a whole curve passes the curve's scale instead.

    Raises
    ------
    NumericalBlowup
        When the sum is not finite or when the weighted terms exceed the
        reference scale by more than ``0.1 / eps``, i.e. the sum has no
        significant digit left.  Without a reference the check applies to
        Gaver-Stehfest only.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.real(weights * values)
    total = terms.sum(axis=-1)
    if not np.all(np.isfinite(total)):
        raise NumericalBlowup("inversion sum is not finite")
    if reference is None and InversionMethod(method) is not InversionMethod.GAVER_STEHFEST:
        return total
    magnitude = np.abs(terms).sum(axis=-1)
    scale = np.abs(total) if reference is None else np.maximum(np.abs(total), abs(reference))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(scale != 0, magnitude / scale, np.inf)
    if np.any((ratio > 0.1 / np.finfo(float).eps) & (magnitude > 0)):
        name = "Gaver-Stehfest" if InversionMethod(method) is InversionMethod.GAVER_STEHFEST else "Talbot"
        raise NumericalBlowup(f"{name} sum lost all significant digits")
    return total


def gaver_stehfest(transform, t, order=14):
    """Gaver-Stehfest inversion at the points ``t``.

    Raises
    ------
    NumericalBlowup
        When the alternating weighted sum cancels to below one significant
        digit, judged by the ratio of the absolute sum to the signed sum.
    """
    t = _check_points(t)
    z, w = _stehfest_nodes(t, order)
    values = np.asarray(transform(z.real.astype(complex)))
    return combine_nodes(values, w, InversionMethod.GAVER_STEHFEST)


def talbot(transform, t, order=32, shift=0.0):
    """Inversion along the fixed-parameter modified Talbot contour.

    The contour ``z(theta) = shift + (N/t) (A + B theta cot(C theta) + i D
    theta)`` is evaluated by the midpoint rule at ``N`` nodes.  ``shift``
    is the abscissa of the transform, so that the contour encloses every
    singularity.
    """
    t = _check_points(t)
    z, w = _talbot_nodes(t, order, shift)
    return combine_nodes(np.asarray(transform(z)), w, InversionMethod.TALBOT)


def invert_values(transform, t, method=InversionMethod.TALBOT, order=None):
    """Pointwise inverse of ``transform`` at the positive points ``t``."""
    settings = InversionSettings(method=method, order=order)
    if settings.method is InversionMethod.GAVER_STEHFEST:
        return gaver_stehfest(transform, t, settings.order)
    return talbot(transform, t, settings.order, shift=transform.abscissa)


def invert(transform, settings):
    """Invert ``transform`` on ``settings.grid`` and return the sampled curve."""
    if settings.grid is None:
        raise DomainError("inversion settings carry no grid")
    values = invert_values(transform, settings.grid.points(), settings.method, settings.order)
    return DensityCurve(settings.grid.start, settings.grid.step, values, label=transform.label)


# ---------------------------------------------------------------------------
# forward transform

def forward(f, s, *, tail_bound=None, cutoff=None, tol=1e-13):
    """Laplace transform ``int_0^inf f(t) exp(-s t) dt`` by adaptive quadrature.

    Parameters
    ----------
    f : callable or DensityCurve
        Real function on ``t >= 0``; sampled curves are interpolated
        linearly and treated as zero beyond their last node.
    s : complex
    tail_bound : tuple (M, c), optional
        Growth bound ``|f(t)| <= M exp(c t)`` valid beyond the cutoff; it
        yields the analytic tail bound ``M exp((c - Re s) T) / (Re s - c)``.
    cutoff : float, optional
        Truncation point ``T``; defaults to ``40 / Re(s)``.

    Returns
    -------
    ForwardResult
        Value and error estimate (quadrature error plus tail bound).

    Raises
    ------
    TailUnbounded
        When no tail bound is given and ``|f(t) exp(-s t)|`` does not decay
        across the probe window ``[T, 2T]``.
    """
    s = complex(s)
    sigma = s.real
    if isinstance(f, DensityCurve):
        curve = f
        x = curve.points()
        vals = np.where(np.isfinite(curve.values), curve.values, curve.smooth_part())

        def func(t):
            if t > x[-1]:
                return 0.0
            return float(np.interp(t, x, vals))

        cutoff = float(x[-1]) if cutoff is None else cutoff
        tail = 0.0
    else:
        func = f
        if cutoff is None:
            if sigma <= 0:
                raise TailUnbounded("a cutoff is required when Re(s) <= 0")
            cutoff = 40.0 / sigma
        if tail_bound is not None:
            big_m, growth = tail_bound
            if sigma <= growth:
                raise TailUnbounded(f"Re(s)={sigma} does not exceed the growth rate {growth}")
            tail = big_m * math.exp((growth - sigma) * cutoff) / (sigma - growth)
        else:
            probe = np.linspace(cutoff, 2.0 * cutoff, 9)
            envelope = np.array([abs(func(p)) * math.exp(-sigma * p) for p in probe])
            start = max(abs(func(cutoff * 1e-3)), 1e-300)
            if not (np.all(np.diff(envelope) <= 1e-300) and envelope[0] <= 1e-12 * start):
                raise TailUnbounded("integrand does not decay on the probe window; supply tail_bound")
            tail = float(envelope[0]) * cutoff
    re_part, re_err = integrate.quad(
        lambda t: func(t) * math.exp(-sigma * t) * math.cos(s.imag * t), 0.0, cutoff, limit=400, epsabs=tol, epsrel=tol
    )
    im_part, im_err = 0.0, 0.0
    if s.imag != 0.0:
        im_part, im_err = integrate.quad(
            lambda t: -func(t) * math.exp(-sigma * t) * math.sin(s.imag * t), 0.0, cutoff, limit=400, epsabs=tol, epsrel=tol
        )
    value = complex(re_part, im_part)
    return ForwardResult(value if s.imag != 0.0 else value.real, re_err + im_err + tail)


# ---------------------------------------------------------------------------
# transforms built from a Laplace exponent

def _exponent_parts(psi):
    evaluator = getattr(psi, "evaluator", psi)
    abscissa = float(getattr(psi, "abscissa", 0.0))
    return evaluator, abscissa


def exit_density_transform(psi, x):
    """Transform, in the barrier level, of the exit-time density ``h(x, .)``.

    ``F(s) = psi(s) exp(-x psi(s)) / s``; ``x`` is the elapsed time.  The
    abscissa is 0 rather than the exponent's branch point: near the branch
    point ``Re psi < 0``, so ``exp(-x psi)`` is large there for large ``x``
    and a contour hugging it loses accuracy.
    """
    x = check_positive(x, "x")
    evaluator, _ = _exponent_parts(psi)

    def transform(s):
        value = evaluator(s)
        return value * np.exp(-x * value) / s

    return TransformFn(transform, 0.0, label=f"exit density transform at x={x:g}")


def exit_cdf_transform(psi, x):
    """Transform, in the level, of ``P(T_t <= x) = P(X_x >= t)``.

    Equals ``(1 - exp(-x psi(s))) / s``, with abscissa 0 for the pole at
    the origin.
    """
    x = check_positive(x, "x")
    evaluator, _ = _exponent_parts(psi)

    def transform(s):
        return -np.expm1(-x * evaluator(s)) / s

    return TransformFn(transform, 0.0, label=f"exit cdf transform at x={x:g}")


def moment_transform(psi, q, *, as_printed=True):
    """Transform, in the level, of the ``q``-th exit-time moment.

    With ``as_printed`` the transform is ``q Gamma(1 + q) / (s psi(s)**q)``;
    otherwise the leading factor ``q`` is dropped, which gives the moment
    itself (``E[T_t**q]`` has transform ``Gamma(1 + q) / (s psi(s)**q)``).
    """
    q = check_positive(q, "q")
    evaluator, _ = _exponent_parts(psi)
    constant = math.gamma(1.0 + q) * (q if as_printed else 1.0)

    def transform(s):
        return constant / (s * evaluator(s) ** q)

    return TransformFn(transform, 0.0, label=f"moment transform q={q:g}")


# ---------------------------------------------------------------------------
# operational rules

def shift_scale(transform, a, b):
    """``a F(a s - b)``, whose inverse is ``exp(b t / a) f(t / a)``."""
    a = check_positive(a, "a")
    return TransformFn(
        lambda s: a * transform(a * s - b), (transform.abscissa + b) / a, label="shift-scale"
    )


def negative_derivative(transform, step=1e-5):
    """``-F'(s)`` by a complex central difference; its inverse is ``t f(t)``."""

    def deriv(s):
        h = step * np.maximum(1.0, np.abs(s))
        return -(transform(s + h) - transform(s - h)) / (2.0 * h)

    return TransformFn(deriv, transform.abscissa, label="negative derivative")


def divide_by_s(transform):
    """``F(s) / s``, whose inverse is the running integral of ``f``."""
    return TransformFn(lambda s: transform(s) / s, max(transform.abscissa, 0.0), label="divide by s")


def multiply_by_s(transform, initial):
    """``s F(s) - f(0)``, whose inverse is ``f'``."""
    return TransformFn(lambda s: s * transform(s) - initial, transform.abscissa, label="multiply by s")


# ---------------------------------------------------------------------------
# known pairs

@dataclass(frozen=True)
class KnownPair:
    """A transform with its exact inverse ``original(t)``."""

    name: str
    transform: TransformFn
    original: Callable[[np.ndarray], np.ndarray]


def _macrobert_original(c, b, m):
    upper = [c + j / m for j in range(m)]
    prefactor = m ** (0.5 + m * c) / ((2.0 * math.pi) ** ((m + 1) / 2.0) * b**c)

    def original(t):
        t = np.asarray(t, dtype=float)
        pair = specfun.macrobert_conjugate_pair(upper, b / (m**m * t))
        return prefactor * pair.value

    return original


def known_pairs():
    """Ten transform pairs with closed-form inverses.

    Oscillatory pairs such as ``a / (s**2 + a**2)`` are excluded because
    real-axis inversion cannot resolve them.
    """
    sqrt_pi = math.sqrt(math.pi)
    pairs = [
        KnownPair("1/s", TransformFn(lambda s: 1.0 / s, 0.0), lambda t: np.ones_like(np.asarray(t, float))),
        KnownPair("1/s^2", TransformFn(lambda s: 1.0 / s**2, 0.0), lambda t: np.asarray(t, float)),
        KnownPair("1/(s+1)", TransformFn(lambda s: 1.0 / (s + 1.0), -1.0), lambda t: np.exp(-np.asarray(t, float))),
        # exp(a/s)/s <-> I0(2 sqrt(a t)); I0(2 sqrt(t)) <= e^4 exp(t/4) bounds the growth
        KnownPair(
            "exp(1/s)/s",
            TransformFn(lambda s: np.exp(1.0 / s) / s, 0.25),
            lambda t: specfun.bessel_i0(2.0 * np.sqrt(np.asarray(t, float))),
        ),
        KnownPair(
            "exp(-sqrt(s))",
            TransformFn(lambda s: np.exp(-np.sqrt(s)), 0.0),
            lambda t: np.exp(-1.0 / (4.0 * np.asarray(t, float))) / (2.0 * sqrt_pi * np.asarray(t, float) ** 1.5),
        ),
        KnownPair(
            "Gamma(0.5)/s (1-(1+s/2)^-0.5)",
            TransformFn(lambda s: sqrt_pi / s * (1.0 - (1.0 + s / 2.0) ** -0.5), -2.0),
            lambda t: specfun.gamma_upper(0.5, 2.0 * np.asarray(t, float)),
        ),
        KnownPair(
            "1/(s sqrt(s+1))",
            TransformFn(lambda s: 1.0 / (s * np.sqrt(s + 1.0)), 0.0),
            lambda t: specfun.erf(np.sqrt(np.asarray(t, float))),
        ),
        KnownPair(
            "1/sqrt(s+1)",
            TransformFn(lambda s: 1.0 / np.sqrt(s + 1.0), -1.0),
            lambda t: np.exp(-np.asarray(t, float)) / np.sqrt(math.pi * np.asarray(t, float)),
        ),
        KnownPair(
            "sqrt(s+1)/s",
            TransformFn(lambda s: np.sqrt(s + 1.0) / s, 0.0),
            lambda t: np.exp(-np.asarray(t, float)) / np.sqrt(math.pi * np.asarray(t, float))
            + specfun.erf(np.sqrt(np.asarray(t, float))),
        ),
        KnownPair(
            "exp(-s^(1/3))",
            TransformFn(lambda s: np.exp(-(s ** (1.0 / 3.0))), 0.0),
            _macrobert_original(1.0, 1.0, 3),
        ),
    ]
    return pairs
