"""Real and complex special-function kernels.

Every closed-form exit density in :mod:`exitlab.firstexit` is assembled from
the functions here: the error function, the upper incomplete gamma function
for arbitrary real order, the modified Bessel functions I0 and I1, the
terminating Gauss hypergeometric sum, the generalized hypergeometric series
and the MacRobert E-function.

Scalar cores are plain Python so that each algorithm reads exactly as it is
analysed; the public wrappers broadcast over numpy arrays.  All series are
accumulated with compensated (Kahan) summation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special as _sp

from .exceptions import DomainError, NonConvergence, PoleError

__all__ = [
    "SeriesValue",
    "PFQParams",
    "erf",
    "erfc",
    "gamma_upper",
    "bessel_i0",
    "bessel_i0_prime",
    "bessel_i0e",
    "bessel_i1e",
    "hyp2f1_terminating",
    "pfq",
    "macrobert_e",
    "macrobert_conjugate_pair",
]

_EPS = np.finfo(float).eps
_SQRT_PI = math.sqrt(math.pi)
_EULER_GAMMA = 0.57721566490153286061
_MAX_ITER = 10_000


class SeriesValue(NamedTuple):
    """A series value together with its estimated absolute error."""

    value: complex
    error: float


class _Kahan:
    __slots__ = ("total", "comp", "abs_total")

    def __init__(self):
        self.total = 0.0
        self.comp = 0.0
        self.abs_total = 0.0

    def add(self, term):
        y = term - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t
        self.abs_total += abs(term)


def _broadcast(core, *args):
    arrays = [np.asarray(a) for a in args]
    if all(a.ndim == 0 for a in arrays):
        return core(*(a.item() for a in arrays))
    return np.vectorize(core, otypes=[float])(*arrays)


# ---------------------------------------------------------------------------
# error function

def _erf_series(x):
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum 2^n x^(2n+1) / (1*3*...*(2n+1)); all terms positive
    x2 = x * x
    term = x
    acc = _Kahan()
    acc.add(term)
    n = 0
    while abs(term) > _EPS * abs(acc.total) * 0.25:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        acc.add(term)
    return 2.0 / _SQRT_PI * math.exp(-x2) * acc.total


def _erfc_positive(x):
    # erfc(x) = Gamma(1/2, x^2) / sqrt(pi)
    return _gamma_upper_cf(0.5, x * x) / _SQRT_PI


def _erf_scalar(x):
    x = float(x)
    if not math.isfinite(x):
        if math.isnan(x):
            return math.nan
        return math.copysign(1.0, x)
    ax = abs(x)
    if ax < 1.5:
        return _erf_series(x)
    if ax > 6.0:
        return math.copysign(1.0, x)
    return math.copysign(1.0 - _erfc_positive(ax), x)


def _erfc_scalar(x):
    x = float(x)
    if x < 1.5:
        return 1.0 - _erf_scalar(x)
    if x > 27.3:
        return 0.0
    return _erfc_positive(x)


def erf(x):
    """Error function, accurate to a few ulp on the whole real line."""
    return _broadcast(_erf_scalar, x)


def erfc(x):
    """Complementary error function with full relative accuracy for x > 0."""
    return _broadcast(_erfc_scalar, x)


# ---------------------------------------------------------------------------
# incomplete gamma

def _lower_gamma_series(a, x):
    # gamma(a, x) = x^a e^-x sum_k x^k / (a (a+1) ... (a+k)),  a > 0
    term = 1.0 / a
    acc = _Kahan()
    acc.add(term)
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        acc.add(term)
        if abs(term) < abs(acc.total) * _EPS * 0.25:
            break
    else:
        raise NonConvergence(f"lower gamma series failed for a={a}, x={x}")
    return math.exp(a * math.log(x) - x) * acc.total


def _gamma_upper_cf(a, x):
    # Legendre continued fraction, modified Lentz; converges for every real a when x > 0
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise NonConvergence(f"incomplete gamma continued fraction failed for a={a}, x={x}")
    return math.exp(a * math.log(x) - x) * h


def _gamma_upper_positive(a, x):
    if x > a + 1.0:
        return _gamma_upper_cf(a, x)
    if a <= 0.5:
        return _gamma_upper_small(a, x)
    return math.gamma(a) - _lower_gamma_series(a, x)


# zeta(k) for the series of log Gamma(1 + b), |b| <= 1/2
_ZETA = [float(_sp.zeta(k)) for k in range(2, 60)]


def _gamma_upper_small(b, x):
    """``Gamma(b, x)`` for ``|b| <= 1/2`` without cancellation near ``b = 0``.

    ``Gamma(b) - x**b / b`` is written as ``(Gamma(1 + b) - 1) / b - (x**b
    - 1) / b``, each term from ``exprel``; the rest is the convergent series
    ``-sum_{k>=1} (-x)**k x**b / (k! (b + k))``.
    """
    # log Gamma(1 + b) / b = -euler + sum_{k>=2} (-1)^k zeta(k) b^(k-1) / k
    lg_over_b = -_EULER_GAMMA
    power = 1.0
    for k, z in enumerate(_ZETA, start=2):
        power *= -b
        term = z * power / k
        lg_over_b -= term
        if abs(term) < _EPS * 0.25 * abs(lg_over_b):
            break
    lg = lg_over_b * b
    log_x = math.log(x)
    head = lg_over_b * _sp.exprel(lg) - log_x * _sp.exprel(b * log_x)
    acc = _Kahan()
    term = 1.0
    xb = math.exp(b * log_x)
    for k in range(1, _MAX_ITER):
        term *= -x / k
        contrib = term * xb / (b + k)
        acc.add(contrib)
        if abs(contrib) < _EPS * 0.25 * max(abs(head), abs(acc.total)):
            break
    return head - acc.total


def _gamma_upper_scalar(a, x):
    a = float(a)
    x = float(x)
    if not (math.isfinite(a) and math.isfinite(x)):
        raise DomainError("gamma_upper requires finite arguments")
    if x <= 0.0:
        raise DomainError(f"gamma_upper requires x > 0, got x={x}")
    if x > a + 1.0 and a * math.log(x) - x < -760.0:
        return 0.0
    if a > 0.0:
        return _gamma_upper_positive(a, x)
    if x > 1.0:
        # the recurrence cancels for large x; the continued fraction holds for any order
        return _gamma_upper_cf(a, x)
    # start in [-1/2, 1/2] and recur downward
    steps = math.ceil(-a - 0.5)
    b = a + steps
    value = _gamma_upper_small(b, x)
    # Gamma(b-1, x) = (Gamma(b, x) - x^(b-1) e^-x) / (b-1)
    for _ in range(steps):
        b -= 1.0
        value = (value - math.exp(b * math.log(x) - x)) / b
    return value


def gamma_upper(a, x):
    """Upper incomplete gamma function for any real order ``a`` and ``x > 0``.

    Positive orders use the power series for the lower function when
    ``x <= a + 1`` and the Legendre continued fraction otherwise.  Orders
    ``a <= 0`` are reached by the downward recurrence
    ``Gamma(a, x) = (Gamma(a + 1, x) - x**a * exp(-x)) / a`` started from
    an order in ``[-1/2, 1/2]``, where a cancellation-free series is used,
    when ``x <= 1``; for ``x > 1`` the recurrence
    cancels, and the continued fraction, valid for every real order, is
    used directly.
    """
    return _broadcast(_gamma_upper_scalar, a, x)


# ---------------------------------------------------------------------------
# modified Bessel functions of the first kind

_I_ASYMPTOTIC_FROM = 50.0


def _bessel_scaled_series(nu, x):
    # e^-x I_nu(x) for nu in {0, 1}
    q = 0.25 * x * x
    term = 1.0 if nu == 0 else 0.5 * x
    acc = _Kahan()
    acc.add(term)
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        acc.add(term)
        if term < acc.total * _EPS * 0.25:
            break
    return acc.total * math.exp(-x)


def _bessel_scaled_asymptotic(nu, x):
    mu = 4.0 * nu * nu
    term = 1.0
    acc = _Kahan()
    acc.add(term)
    k = 0
    while True:
        k += 1
        new = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(new) >= abs(term) or abs(new) < _EPS * 0.25:
            if abs(new) < abs(term):
                acc.add(new)
            break
        term = new
        acc.add(term)
    return acc.total / math.sqrt(2.0 * math.pi * x)


def _bessel_scaled(nu, x):
    x = float(x)
    if x < 0.0 or math.isnan(x):
        raise DomainError(f"modified Bessel kernels require x >= 0, got {x}")
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    if x <= _I_ASYMPTOTIC_FROM:
        return _bessel_scaled_series(nu, x)
    return _bessel_scaled_asymptotic(nu, x)


def _unscale(scaled, x):
    if x > 709.0:
        log_value = math.log(scaled) + x
        if log_value > 709.78:
            raise OverflowError(f"I(x) overflows double precision at x={x}")
        return math.exp(log_value)
    return scaled * math.exp(x)


def bessel_i0e(x):
    """Exponentially scaled ``exp(-x) * I0(x)`` for ``x >= 0``."""
    return _broadcast(lambda v: _bessel_scaled(0, v), x)


def bessel_i1e(x):
    """Exponentially scaled ``exp(-x) * I1(x)`` for ``x >= 0``."""
    return _broadcast(lambda v: _bessel_scaled(1, v), x)


def bessel_i0(x):
    """Modified Bessel function I0 from its power series.

    Raises :class:`OverflowError` when the result leaves the double range.
    """
    return _broadcast(lambda v: _unscale(_bessel_scaled(0, v), float(v)), x)


def bessel_i0_prime(x):
    """Derivative of I0, which equals I1."""
    return _broadcast(lambda v: _unscale(_bessel_scaled(1, v), float(v)), x)


# ---------------------------------------------------------------------------
# terminating Gauss hypergeometric sum

def _exact(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    return Fraction(float(value))


def hyp2f1_terminating(n, c, x):
    """Finite sum ``2F1(-n, -n; c; x)`` evaluated exactly and rounded once.

    Raises
    ------
    PoleError
        If ``(c)_k`` vanishes for some ``k <= n``.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise DomainError(f"n must be a non-negative integer, got {n!r}")
    n = int(n)
    c_exact = _exact(c)
    x_exact = _exact(x)
    total = Fraction(1)
    term = Fraction(1)
    for k in range(n):
        denominator = c_exact + k
        if denominator == 0:
            raise PoleError(
                f"(c)_{k + 1} = 0 for c={c}: 2F1(-{n}, -{n}; {c}; x) has a pole"
            )
        term = term * (k - n) * (k - n) * x_exact / (denominator * (k + 1))
        total += term
    return float(total)


# ---------------------------------------------------------------------------
# generalized hypergeometric series

@dataclass(frozen=True)
class PFQParams:
    """Parameters of ``pFq(upper; lower; argument)``."""

    upper: Sequence[complex] = field(default_factory=tuple)
    lower: Sequence[complex] = field(default_factory=tuple)
    argument: complex = 0.0


def _nonpositive_integer(value):
    value = complex(value)
    return value.imag == 0.0 and value.real <= 0.0 and value.real == math.floor(value.real)


def _terminating_order(upper):
    orders = [int(-complex(a).real) for a in upper if _nonpositive_integer(a)]
    return min(orders) if orders else None


def _series_arrays(upper, lower, z, terms, tol):
    """Vectorised pFq partial sums; returns (values, errors, converged mask)."""
    z = np.asarray(z, dtype=complex)
    upper = [complex(a) for a in upper]
    lower = [complex(b) for b in lower]
    stop = _terminating_order(upper)
    for b in lower:
        if _nonpositive_integer(b):
            order = int(-b.real)
            if stop is None or stop > order:
                raise PoleError(f"lower parameter {b.real:g} hits a pole before the series terminates")
    term = np.ones_like(z)
    total = np.ones_like(z)
    comp = np.zeros_like(z)
    abs_total = np.ones(z.shape)
    converged = np.zeros(z.shape, dtype=bool)
    last_ratio = np.zeros(z.shape)
    limit = terms if stop is None else min(terms, stop + 1)
    n = 0
    for n in range(limit):
        if stop is not None and n == stop:
            converged[...] = True
            break
        factor = 1.0 + 0.0j
        for a in upper:
            factor *= a + n
        for b in lower:
            factor /= b + n
        factor /= n + 1
        new = term * factor * z
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(term != 0, np.abs(new) / np.abs(term), 0.0)
        term = new
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        abs_total += np.abs(term)
        last_ratio = ratio
        small = np.abs(term) <= tol * np.abs(total)
        converged |= small & (ratio < 1.0)
        if np.all(converged | (term == 0)):
            converged[...] = True
            break
    else:
        if stop is not None and limit == stop + 1:
            converged[...] = True
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(last_ratio < 1.0, np.abs(term) * last_ratio / (1.0 - last_ratio), np.inf)
    if stop is not None and n == stop:
        tail = np.zeros(z.shape)
    errors = tail + _EPS * abs_total
    return total, errors, converged


def _wynn_epsilon(partial_sums):
    # returns the last two diagonal estimates of the epsilon table
    eps_prev = [0.0] * (len(partial_sums) + 1)
    eps_curr = list(partial_sums)
    estimates = []
    for k in range(1, len(partial_sums)):
        nxt = []
        for i in range(len(eps_curr) - 1):
            diff = eps_curr[i + 1] - eps_curr[i]
            if diff == 0:
                return estimates[-2:] if len(estimates) >= 2 else [eps_curr[i + 1]] * 2
            nxt.append(eps_prev[i + 1] + 1.0 / diff)
        eps_prev, eps_curr = eps_curr, nxt
        if k % 2 == 0 and eps_curr:
            estimates.append(eps_curr[-1])
        if not eps_curr:
            break
    return estimates[-2:]


def _unit_circle_sum(upper, lower, z, tol):
    # |x| = 1 with p = q + 1 converges at most algebraically; accelerate the partial sums
    excess = sum(complex(b) for b in lower) - sum(complex(a) for a in upper)
    if excess.real <= -1.0 or (excess.real <= 0.0 and z == 1.0):
        raise NonConvergence("pFq diverges on the unit circle for these parameters")
    sums = []
    term = 1.0 + 0.0j
    acc = _Kahan()
    acc.add(term)
    sums.append(acc.total)
    for n in range(40):
        factor = 1.0 + 0.0j
        for a in upper:
            factor *= complex(a) + n
        for b in lower:
            factor /= complex(b) + n
        term *= factor * z / (n + 1)
        acc.add(term)
        sums.append(acc.total)
    estimates = _wynn_epsilon(sums)
    value = estimates[-1]
    error = abs(estimates[-1] - estimates[-2]) + _EPS * acc.abs_total
    if error > max(1e-10, tol) * max(1.0, abs(value)):
        raise NonConvergence("accelerated pFq on the unit circle did not settle", partial=value, error=error)
    return SeriesValue(complex(value), float(error))


def pfq(params, terms=2000, tol=1e-17):
    """Partial sum of the generalized hypergeometric series.

    Returns a :class:`SeriesValue` whose ``error`` combines the truncation
    bound of the geometric tail with the accumulated rounding error.  The
    argument may be an array, in which case both fields are arrays.

    Raises
    ------
    NonConvergence
        When the ratio test has not brought the terms below ``tol`` within
        ``terms`` terms.
    PoleError
        When a lower parameter is a non-positive integer that the series
        reaches before terminating.
    """
    upper = tuple(params.upper)
    lower = tuple(params.lower)
    z = np.asarray(params.argument, dtype=complex)
    stop = _terminating_order(upper)
    if stop is None and len(upper) > len(lower) + 1 and np.any(z != 0):
        raise NonConvergence("pFq with p > q + 1 diverges for nonzero argument")
    if stop is None and len(upper) == len(lower) + 1 and np.any(np.abs(z) >= 1.0):
        if z.ndim == 0 and abs(complex(z)) == 1.0:
            return _unit_circle_sum(upper, lower, complex(z), tol)
        raise NonConvergence("pFq with p = q + 1 needs |x| < 1")
    values, errors, converged = _series_arrays(upper, lower, z, terms, tol)
    if not np.all(converged):
        raise NonConvergence(
            f"pFq did not converge in {terms} terms",
            partial=values if values.ndim else complex(values),
            error=errors if errors.ndim else float(errors),
        )
    if values.ndim == 0:
        return SeriesValue(complex(values), float(errors))
    return SeriesValue(values, errors)


# ---------------------------------------------------------------------------
# MacRobert E-function

def _power(x, arg, a):
    # x**a on the branch where x has argument ``arg``
    return np.exp(a * (np.log(np.abs(x)) + 1j * arg))


def _macrobert_small(a_list, b_list, r, arg, terms):
    m, n = len(a_list), len(b_list)
    x = r * np.exp(1j * arg)
    total = np.zeros(np.shape(r), dtype=complex)
    error = np.zeros(np.shape(r))
    scale = np.zeros(np.shape(r))
    sign = (-1.0) ** (m + n)
    for i, ai in enumerate(a_list):
        coeff = complex(_sp.gamma(ai))
        for j, aj in enumerate(a_list):
            if j == i:
                continue
            diff = aj - ai
            if _nonpositive_integer(diff):
                raise PoleError("MacRobert E parameters differ by an integer")
            coeff *= complex(_sp.gamma(diff))
        for bk in b_list:
            coeff *= complex(_sp.rgamma(bk - ai))
        upper = [ai] + [ai - bk + 1 for bk in b_list]
        lower = [ai - aj + 1 for j, aj in enumerate(a_list) if j != i]
        values, errors, converged = _series_arrays(upper, lower, sign * x, terms, 1e-17)
        if not np.all(converged):
            raise NonConvergence("MacRobert E small-|x| series did not converge")
        prefactor = coeff * _power(r, arg, ai)
        piece = prefactor * values
        total = total + piece
        error = error + np.abs(prefactor) * errors
        scale = np.maximum(scale, np.abs(piece))
    return total, error + _EPS * scale


def _macrobert_large(a_list, b_list, r, arg, terms):
    coeff = 1.0 + 0.0j
    for ai in a_list:
        coeff *= complex(_sp.gamma(ai))
    for bj in b_list:
        coeff *= complex(_sp.rgamma(bj))
    x = r * np.exp(1j * arg)
    values, errors, converged = _series_arrays(a_list, b_list, -1.0 / x, terms, 1e-17)
    if not np.all(converged):
        raise NonConvergence("MacRobert E large-|x| series did not converge")
    return coeff * values, np.abs(coeff) * errors


def macrobert_e(a_list, x, b_list=(), arg=None, terms=4000):
    """MacRobert E-function ``E(a_1..a_m : b_1..b_n : x)``.

    ``arg`` fixes the branch of ``x``; it defaults to the principal argument
    but must be given explicitly for inputs such as ``x * exp(i*pi)`` whose
    branch is lost once the exponential is evaluated.  ``x`` may be an
    array of moduli when ``arg`` is supplied.

    For ``m >= n + 1`` the sum of ``m`` hypergeometric series is used and for
    ``m <= n + 1`` the single series in ``-1/x``.  When both apply (``m = n +
    1``) each is tried and the one with the smaller error estimate wins.

    Returns
    -------
    SeriesValue
    """
    a_list = [complex(a) for a in a_list]
    b_list = [complex(b) for b in b_list]
    m, n = len(a_list), len(b_list)
    if m == 0:
        raise DomainError("MacRobert E needs at least one upper parameter")
    if arg is None:
        x = np.asarray(x, dtype=complex)
        arg = np.angle(x)
        r = np.abs(x)
    else:
        r = np.abs(np.asarray(x))
        arg = np.asarray(arg, dtype=float)
    if np.any(r == 0):
        raise DomainError("MacRobert E is not defined at x = 0")

    candidates = []
    failures = []
    if m >= n + 1:
        small_ok = m >= n + 2 or np.all(r < 1.0)
        if small_ok:
            try:
                candidates.append(_macrobert_small(a_list, b_list, r, arg, terms))
            except NonConvergence as exc:
                failures.append(exc)
    if m <= n + 1:
        large_ok = m <= n or np.all(r > 1.0)
        if large_ok:
            try:
                candidates.append(_macrobert_large(a_list, b_list, r, arg, terms))
            except NonConvergence as exc:
                failures.append(exc)
    if not candidates:
        raise NonConvergence(
            f"neither MacRobert E series converges for m={m}, n={n} at |x|={np.max(r):g}"
        )
    value, error = min(candidates, key=lambda c: float(np.max(c[1])))
    if np.ndim(value) == 0:
        return SeriesValue(complex(value), float(error))
    return SeriesValue(value, error)


def macrobert_conjugate_pair(a_list, r, terms=4000):
    """Real sum ``(1/i) E(a :: r e^{i pi}) + (1/(-i)) E(a :: r e^{-i pi})``.

    Returns a :class:`SeriesValue` whose value is real; the residual
    imaginary part (zero in exact arithmetic) is folded into the error.
    """
    upper = macrobert_e(a_list, r, arg=np.full(np.shape(r), math.pi), terms=terms)
    lower = macrobert_e(a_list, r, arg=np.full(np.shape(r), -math.pi), terms=terms)
    total = upper.value / 1j + lower.value / (-1j)
    error = 2.0 * np.maximum(upper.error, lower.error) + np.abs(np.imag(total))
    if np.ndim(total) == 0:
        return SeriesValue(float(np.real(total)), float(error))
    return SeriesValue(np.real(total), error)
