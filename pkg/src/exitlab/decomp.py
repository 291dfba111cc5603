"""Joint-probability integrals behind the exit-time decomposition.

For a Brownian part and a subordinator part, ``P1`` is a joint probability
of two Brownian levels, ``P2`` the matching joint probability of two
subordinator levels, and the decomposition probability ``P`` integrates
their product over the offset ``eps`` and the two elapsed times.  Both a
driftless unit-scale variant and a variant with drift, volatility and
leverage loadings are provided.

Each ``P1`` and ``P2`` is split analytically at the kink of its ``max`` /
``min`` threshold, which leaves one smooth one-dimensional integral.  The
scalar functions evaluate it with adaptive quadrature; the triple integral
uses a vectorised tensor rule built from the same decomposition.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy import special as _sp

from . import laplace, specfun
from ._validation import check_finite, check_positive
from .exceptions import BudgetExceeded, DomainError, MarginalUnavailable, NumericalBlowup
from .levy import (
    GammaBDLP,
    GammaStationary,
    IGBDLP,
    IGStationary,
    ModelParams,
    PTSBDLP,
    PTSStationary,
    SubordinatorSpec,
)

__all__ = [
    "Variant",
    "DecompositionInput",
    "DecompositionResult",
    "marginal_atom",
    "marginal_density",
    "marginal_survival",
    "p1_basic",
    "p2_basic",
    "p1_general",
    "p2_general",
    "decomposition_probability",
    "integrand_samples",
]

_TAU_SPAN = 8.0


# ---------------------------------------------------------------------------
# marginal laws of Y_t

def marginal_atom(spec, t):
    """``P(Y_t = 0)``: ``exp(-nu t)`` for the compound Poisson Gamma BDLP, 0 otherwise."""
    t = np.asarray(t, dtype=float)
    if isinstance(spec, GammaBDLP):
        return np.exp(-spec.jump_rate * t)
    return np.zeros_like(t)


def _numeric_marginal(spec, t, y, survival):
    t, y = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(y, dtype=float))
    out = np.ones(t.shape) if survival else np.zeros(t.shape)
    pos = (y > 0) & (t > 0)
    if not np.any(pos):
        return out
    z, w = laplace.inversion_nodes(y[pos], laplace.InversionMethod.TALBOT, 32, shift=0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.exp(-t[pos][:, None] * spec.psi(z))
        if survival:
            values = values / z
    try:
        inverted = laplace.combine_nodes(values, w, laplace.InversionMethod.TALBOT)
    except NumericalBlowup as exc:
        raise MarginalUnavailable(f"inversion of exp(-t psi) failed for {spec}: {exc}") from None
    out[pos] = np.clip(1.0 - inverted, 0.0, 1.0) if survival else np.maximum(inverted, 0.0)
    return out


def _poisson_gamma_survival(rate_t, alpha_y):
    """``sum_{n>=1} Pois(n; rate_t) Q(n, alpha_y)`` for broadcast arrays."""
    rate_t, alpha_y = np.broadcast_arrays(rate_t, alpha_y)
    if rate_t.size == 0:
        return np.zeros(rate_t.shape)
    top = int(np.max(rate_t) + 12.0 * math.sqrt(np.max(rate_t) + 1.0) + 30)
    total = np.zeros(rate_t.shape)
    log_rate = np.log(np.maximum(rate_t, 1e-300))
    for n in range(1, top + 1):
        weight = np.exp(n * log_rate - rate_t - math.lgamma(n + 1))
        total += weight * _sp.gammaincc(n, alpha_y)
    return total


def marginal_density(spec, t, y):
    """Density of the absolutely continuous part of ``Y_t`` at ``y > 0``.

    Gamma and IG stationary laws use their closed forms, the Gamma BDLP its
    Bessel series (the atom at 0 is reported by :func:`marginal_atom`), and
    the remaining laws invert ``exp(-t psi(s))`` on the Talbot contour.
    """
    t, y = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(t.shape)
    pos = (y > 0) & (t > 0)
    tp, yp = t[pos], y[pos]
    if isinstance(spec, GammaStationary):
        shape = spec.nu * tp
        out[pos] = np.exp(
            (shape - 1.0) * np.log(yp) - spec.alpha * yp + shape * math.log(spec.alpha) - _sp.gammaln(shape)
        )
    elif isinstance(spec, GammaBDLP):
        rate = spec.jump_rate * tp
        z = 2.0 * np.sqrt(rate * spec.alpha * yp)
        # exp(-rate - alpha y) I1(z) = i1e(z) exp(-(sqrt(rate) - sqrt(alpha y))**2)
        out[pos] = (
            specfun.bessel_i1e(z)
            * np.exp(-((np.sqrt(rate) - np.sqrt(spec.alpha * yp)) ** 2))
            * np.sqrt(rate * spec.alpha / yp)
        )
    elif isinstance(spec, IGStationary):
        d = spec.delta * tp
        out[pos] = d / math.sqrt(2.0 * math.pi) * yp**-1.5 * np.exp(-((d - spec.gamma * yp) ** 2) / (2.0 * yp))
    elif isinstance(spec, (IGBDLP, PTSStationary, PTSBDLP)):
        return _numeric_marginal(spec, t, y, survival=False)
    else:
        raise MarginalUnavailable(f"no marginal density for {spec!r}")
    return out


def marginal_survival(spec, t, y):
    """``P(Y_t >= y)``, atom included; equal to 1 for ``y <= 0``."""
    t, y = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(y, dtype=float))
    out = np.ones(t.shape)
    pos = y > 0
    zero_time = pos & (t <= 0)
    out[zero_time] = 0.0
    pos &= t > 0
    tp, yp = t[pos], y[pos]
    if isinstance(spec, GammaStationary):
        out[pos] = _sp.gammaincc(spec.nu * tp, spec.alpha * yp)
    elif isinstance(spec, GammaBDLP):
        out[pos] = _poisson_gamma_survival(spec.jump_rate * tp, spec.alpha * yp)
    elif isinstance(spec, IGStationary):
        d, g = spec.delta * tp, spec.gamma
        root = np.sqrt(yp)
        cdf = _sp.ndtr((g * yp - d) / root) + np.exp(2.0 * d * g + _sp.log_ndtr(-(g * yp + d) / root))
        out[pos] = np.clip(1.0 - cdf, 0.0, 1.0)
    elif isinstance(spec, (IGBDLP, PTSStationary, PTSBDLP)):
        out[pos] = _numeric_marginal(spec, tp, yp, survival=True)
    else:
        raise MarginalUnavailable(f"no marginal law for {spec!r}")
    return out


# ---------------------------------------------------------------------------
# scalar joint probabilities

def _upper_normal(x, variance):
    """``P(N(0, variance) >= x)``."""
    return 0.5 * _sp.erfc(x / np.sqrt(2.0 * variance))


def p1_basic(eps, t, alpha, a):
    """``P(W_{t+alpha} >= a - eps, W_t >= a)``.

    With ``chi = W_{t+alpha} - W_t`` the event is ``W_t >= max(a, a - eps -
    chi)``.  For ``chi >= -eps`` the threshold is ``a``; the remaining
    ``chi`` range is integrated adaptively over ``[-8 sqrt(alpha), -eps]``.
    """
    eps = check_finite(eps, "eps")
    t = check_positive(t, "t")
    alpha = check_positive(alpha, "alpha")
    a = check_finite(a, "a")
    flat = float(_upper_normal(a, t) * _upper_normal(-eps, alpha))
    lo, hi = -_TAU_SPAN * math.sqrt(alpha), min(-eps, _TAU_SPAN * math.sqrt(alpha))
    if hi <= lo:
        return min(max(flat, 0.0), 1.0)

    def integrand(tau):
        return math.exp(-0.5 * tau * tau / alpha) / math.sqrt(2.0 * math.pi * alpha) * float(
            _upper_normal(a - eps - tau, t)
        )

    tail, _ = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-11, limit=200)
    return min(max(flat + tail, 0.0), 1.0)


def _p2_core(threshold, offset, spec, eta_time, y_time):
    """``P(Y >= max(threshold, offset - eta, 0))`` with ``eta ~ Y_eta_time``, ``Y ~ Y_y_time`` independent."""
    floor = max(threshold, 0.0)
    kink = offset - floor
    flat = float(marginal_survival(spec, y_time, floor)) * float(marginal_survival(spec, eta_time, max(kink, 0.0)))
    if kink <= 0:
        return min(max(flat, 0.0), 1.0)
    atom = float(marginal_atom(spec, eta_time))
    total = flat
    if atom:
        total += atom * float(marginal_survival(spec, y_time, offset))

    def integrand(beta):
        return float(marginal_density(spec, eta_time, beta)) * float(marginal_survival(spec, y_time, offset - beta))

    part, _ = integrate.quad(integrand, 0.0, kink, epsabs=1e-13, epsrel=1e-10, limit=200)
    return min(max(total + part, 0.0), 1.0)


def p2_basic(eps, t, alpha, b, spec):
    """``P(Y_{t+alpha} >= b + eps, Y_alpha >= b)`` written as ``P(Y_alpha >= max(b, b + eps - eta))``.

    ``eta ~ Y_t`` is the independent increment.  For ``eta >= eps`` the
    threshold is ``b``; below it the ``eta`` integral runs over
    ``[0, eps]``, with the atom of ``Y_t`` at zero (Gamma BDLP) added
    explicitly.

    Raises
    ------
    MarginalUnavailable
        When the law of ``Y_t`` cannot be evaluated.
    """
    eps = check_finite(eps, "eps")
    t = check_positive(t, "t")
    alpha = check_positive(alpha, "alpha")
    b = check_finite(b, "b")
    if not isinstance(spec, SubordinatorSpec):
        raise MarginalUnavailable(f"no marginal law for {spec!r}")
    return _p2_core(b, b + eps, spec, t, alpha)


def _general_thresholds(eps, t1, t2, a, b, model):
    mu, sigma, rho = model.mu, model.sigma, model.rho
    s = t1 + t2
    c1 = (-a - mu * t1) / sigma
    c2 = (-a - eps) / sigma - mu * s / (2.0 * sigma)
    d1 = (b - mu * t2) / rho
    d2 = (b + eps) / rho - mu * s / (2.0 * rho)
    return c1, c2, d1, d2


def _general_query(query):
    model = getattr(query, "model", None)
    if model is None:
        raise DomainError("the general variant needs model parameters")
    return query.a, query.b, model, query.spec


def p1_general(eps, t1, t2, query):
    """Brownian joint probability with drift and volatility loadings, with the thresholds as tabulated.

    ``P1 = int phi_{t2}(tau) P(W_{t1} <= min(c1, c2 - tau)) dtau`` with
    ``c1 = (-a - mu t1) / sigma`` and ``c2 = (-a - eps) / sigma - mu (t1 +
    t2) / (2 sigma)``.  For ``tau <= c2 - c1`` the threshold is ``c1``.
    """
    eps = check_finite(eps, "eps")
    t1 = check_positive(t1, "t1")
    t2 = check_positive(t2, "t2")
    a, b, model, _ = _general_query(query)
    if model.sigma <= 0:
        raise DomainError("sigma must be positive for the Brownian joint probability")
    c1, c2, _, _ = _general_thresholds(eps, t1, t2, a, b, model)
    kink = c2 - c1
    flat = float(_upper_normal(-c1, t1) * _upper_normal(-kink, t2))
    span = _TAU_SPAN * math.sqrt(t2)
    lo, hi = max(kink, -span), span
    if hi <= lo:
        return min(max(flat, 0.0), 1.0)

    def integrand(tau):
        return math.exp(-0.5 * tau * tau / t2) / math.sqrt(2.0 * math.pi * t2) * float(_upper_normal(tau - c2, t1))

    tail, _ = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-11, limit=200)
    return min(max(flat + tail, 0.0), 1.0)


def p2_general(eps, t1, t2, query):
    """Subordinator joint probability with leverage loading ``rho < 0``, thresholds as tabulated.

    ``P2 = int f_{Z_t1}(beta) P(Z_t2 >= max(d1, d2 - beta, 0)) dbeta`` with
    ``d1 = (b - mu t2) / rho`` and ``d2 = (b + eps) / rho - mu (t1 + t2) /
    (2 rho)``.
    """
    eps = check_finite(eps, "eps")
    t1 = check_positive(t1, "t1")
    t2 = check_positive(t2, "t2")
    a, b, model, spec = _general_query(query)
    if model.rho >= 0:
        raise DomainError(f"rho must be negative, got {model.rho}")
    _, _, d1, d2 = _general_thresholds(eps, t1, t2, a, b, model)
    return _p2_core(d1, d2, spec, t1, t2)


# ---------------------------------------------------------------------------
# vectorised integrands for the tensor rule

@dataclass(frozen=True)
class _Rule:
    nodes: np.ndarray
    weights: np.ndarray


def _gauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return _Rule(x, w)


def _tanh_sinh(level):
    """Tanh-sinh rule on ``[0, 1]`` as (left distance, weight) pairs."""
    h = 2.0**-level
    k = np.arange(-int(3.2 / h), int(3.2 / h) + 1) * h
    u = 0.5 * math.pi * np.sinh(k)
    left = _sp.expit(2.0 * u)
    weights = h * 0.5 * math.pi * np.cosh(k) / (2.0 * np.cosh(u) ** 2)
    keep = (left > 1e-300) & (left < 1.0) & (weights > 1e-300)
    return _Rule(left[keep], weights[keep])


def _gauss_on(rule, lo, hi):
    """Nodes and weights of ``rule`` mapped to ``[lo, hi]`` (broadcast over leading axes)."""
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    return lo + half * (rule.nodes + 1.0), half * rule.weights


def _p1_basic_vec(eps, t, alpha, a, rule):
    flat = _upper_normal(a, t) * _upper_normal(-eps, alpha)
    span = _TAU_SPAN * np.sqrt(alpha)
    lo, hi = -span, np.minimum(-eps, span)
    hi = np.maximum(hi, lo)
    tau, w = _gauss_on(rule, lo, hi)
    density = np.exp(-0.5 * tau**2 / alpha[..., None]) / np.sqrt(2.0 * math.pi * alpha[..., None])
    tail = np.sum(w * density * _upper_normal(a - eps[..., None] - tau, t[..., None]), axis=-1)
    return flat + tail


def _p1_general_vec(c1, c2, t1, t2, rule):
    kink = c2 - c1
    flat = _upper_normal(-c1, t1) * _upper_normal(-kink, t2)
    span = _TAU_SPAN * np.sqrt(t2)
    lo = np.maximum(kink, -span)
    hi = np.maximum(span, lo)
    tau, w = _gauss_on(rule, lo, hi)
    density = np.exp(-0.5 * tau**2 / t2[..., None]) / np.sqrt(2.0 * math.pi * t2[..., None])
    tail = np.sum(w * density * _upper_normal(tau - c2[..., None], t1[..., None]), axis=-1)
    return flat + tail


def _p2_vec(threshold, offset, spec, eta_time, y_time, rule):
    floor = np.maximum(threshold, 0.0)
    kink = offset - floor
    flat = marginal_survival(spec, y_time, floor) * marginal_survival(spec, eta_time, np.maximum(kink, 0.0))
    active = kink > 0
    total = flat.copy()
    if np.any(active):
        k = kink[active]
        et, yt, off = eta_time[active], y_time[active], offset[active]
        atom = marginal_atom(spec, et)
        beta = k[:, None] * rule.nodes[None, :]
        w = k[:, None] * rule.weights[None, :]
        dens = marginal_density(spec, np.broadcast_to(et[:, None], beta.shape), beta)
        surv = marginal_survival(spec, np.broadcast_to(yt[:, None], beta.shape), off[:, None] - beta)
        total[active] += atom * marginal_survival(spec, yt, off) + np.sum(w * dens * surv, axis=-1)
    return total


_TAU_RULE = _gauss(48)
_EXCESS_RULE = _gauss(16)
_BETA_RULE = _tanh_sinh(3)


class DecompositionResult(NamedTuple):
    """Truncated triple integral with its error budget.

    ``truncation_bound`` bounds the mass of the integrand outside the
    ``eps`` window inside the time box; the mass outside the time box is
    not bounded (the integrand does not decay in the elapsed times).
    """

    value: float
    quadrature_error: float
    truncation_bound: float
    evaluations: int
    sample_min: float
    sample_max: float


class Variant(str, enum.Enum):
    BASIC = "basic"
    GENERAL = "general"


@dataclass(frozen=True)
class DecompositionInput:
    """Barriers, laws and truncation box of the decomposition integral."""

    variant: Variant
    a: float
    b: float
    spec: SubordinatorSpec
    model: ModelParams | None = None
    epsilon_window: float = 10.0
    time_box: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "a", check_positive(self.a, "a"))
        object.__setattr__(self, "b", check_positive(self.b, "b"))
        object.__setattr__(self, "epsilon_window", check_positive(self.epsilon_window, "epsilon_window"))
        object.__setattr__(self, "time_box", check_positive(self.time_box, "time_box"))
        if self.variant is Variant.GENERAL:
            if self.model is None:
                raise DomainError("the general variant needs model parameters")
            if self.model.sigma <= 0:
                raise DomainError("the general variant needs sigma > 0")
            if self.model.rho >= 0:
                raise DomainError("the general variant needs rho < 0")


def _gaussian_excess(c, variance):
    """``E[(X - c)^+]`` for ``X ~ N(0, variance)``."""
    sd = np.sqrt(variance)
    z = c / sd
    return sd * np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi) - c * _upper_normal(z, 1.0)


def _survival_excess(spec, s, start):
    """``int_start^inf P(Y_s >= y) dy = E[(Y_s - start)^+]`` for arrays ``s``, ``start``.

    The survival function is integrated with Gauss-Legendre panels up to a
    cut-off beyond which the exponential-moment bound ``exp(s kappa(theta)
    - theta y) / theta`` (``theta`` half the tilt) is below ``1e-14``; that
    bound is added as the remainder.
    """
    s, start = np.broadcast_arrays(np.asarray(s, float), np.asarray(start, float))
    theta = 0.5 * spec.tilt
    kappa = -float(np.real(spec.psi(-theta)))
    below = np.maximum(-start, 0.0)
    lo = np.maximum(start, 0.0)
    cut = np.maximum(lo, (s * kappa + math.log(1.0 / (theta * 1e-14))) / theta)
    remainder = np.exp(s * kappa - theta * cut) / theta
    edges = lo[..., None] + (cut - lo)[..., None] * np.linspace(0.0, 1.0, 9)
    total = np.zeros(s.shape)
    for k in range(8):
        y, w = _gauss_on(_EXCESS_RULE, edges[..., k], edges[..., k + 1])
        total += np.sum(w * marginal_survival(spec, np.broadcast_to(s[..., None], y.shape), y), axis=-1)
    return below + total + remainder


def _eps_integrated(inp, tt, uu, eps_rule, tau_rule, beta_rule):
    """Integrand summed over the ``eps`` rule at time pairs ``(tt, uu)`` (1-D arrays)."""
    E = inp.epsilon_window
    if inp.variant is Variant.BASIC:
        kinks = np.zeros_like(tt)
    else:
        m = inp.model
        s = tt + uu
        # P2's threshold switches branch where d2 = max(d1, 0)
        floor = np.maximum((inp.b - m.mu * uu) / m.rho, 0.0)
        kinks = m.rho * floor + 0.5 * m.mu * s - inp.b
    kinks = np.clip(kinks, -E, E)
    left_e, left_w = _gauss_on(eps_rule, -E, kinks)
    right_e, right_w = _gauss_on(eps_rule, kinks, E)
    eps = np.concatenate([left_e, right_e], axis=-1)
    weights = np.concatenate([left_w, right_w], axis=-1)
    flat_eps = eps.ravel()
    flat_t = np.repeat(tt, eps.shape[-1])
    flat_u = np.repeat(uu, eps.shape[-1])
    if inp.variant is Variant.BASIC:
        p1 = _p1_basic_vec(flat_eps, flat_t, flat_u, inp.a, tau_rule)
        p2 = _p2_vec(np.full_like(flat_eps, inp.b), inp.b + flat_eps, inp.spec, flat_t, flat_u, beta_rule)
    else:
        c1, c2, d1, d2 = _general_thresholds(flat_eps, flat_t, flat_u, inp.a, inp.b, inp.model)
        p1 = _p1_general_vec(c1, c2, flat_t, flat_u, tau_rule)
        p2 = _p2_vec(d1, d2, inp.spec, flat_t, flat_u, beta_rule)
    samples = (p1 * p2).reshape(eps.shape)
    lo, hi = float(samples.min()), float(samples.max())
    if lo < -1e-9 or hi > 1.0 + 1e-9:
        raise NumericalBlowup(f"integrand sample outside [0, 1]: [{lo:.3e}, {hi:.3e}]")
    samples = np.clip(samples, 0.0, 1.0)
    return np.sum(weights * samples, axis=-1), lo, hi


def _window_bound(inp, s):
    """Integrand mass outside the ``eps`` window at total elapsed time ``s``."""
    E = inp.epsilon_window
    if inp.variant is Variant.BASIC:
        upper = _survival_excess(inp.spec, s, inp.b + E)
        lower = _gaussian_excess(inp.a + E, s)
    else:
        m = inp.model
        upper = m.sigma * _gaussian_excess((inp.a + E) / m.sigma + m.mu * s / (2.0 * m.sigma), s)
        lower = abs(m.rho) * _survival_excess(inp.spec, s, (E - inp.b + 0.5 * m.mu * s) / abs(m.rho))
    return upper + lower


_CHUNK = 20_000


def _integrand_grid(inp, t_nodes, u_nodes, eps_rule, tau_rule, beta_rule):
    """``eps``-integrated integrand on the time grid, with sample extremes and window bound."""
    tt, uu = np.meshgrid(t_nodes, u_nodes, indexing="ij")
    flat_t, flat_u = tt.ravel(), uu.ravel()
    per_pair = 2 * len(eps_rule.nodes) * max(len(tau_rule.nodes), len(beta_rule.nodes))
    step = max(1, _CHUNK * 20 // per_pair)
    inner = np.empty(flat_t.shape)
    lo, hi = 1.0, 0.0
    for start in range(0, len(flat_t), step):
        sl = slice(start, start + step)
        inner[sl], c_lo, c_hi = _eps_integrated(inp, flat_t[sl], flat_u[sl], eps_rule, tau_rule, beta_rule)
        lo, hi = min(lo, c_lo), max(hi, c_hi)
    return inner.reshape(tt.shape), (lo, hi), _window_bound(inp, tt + uu)


def decomposition_probability(inp, *, tol=1e-5, start_order=8, max_evaluations=600_000):
    """Truncated decomposition integral over ``eps`` in ``[-E, E]`` and both times in ``(0, T]``.

    The integral is evaluated exactly as tabulated, as a tensor product of
    Gauss-Legendre rules (the ``eps`` rule split at the analytic kink of
    ``P2``), with orders grown by half until two successive values agree to
    ``tol`` relative to ``max(|value|, 1)``.  The value is reported without
    normalisation; whether it is a probability is not asserted.

    Raises
    ------
    BudgetExceeded
        When the next refinement would exceed ``max_evaluations`` integrand
        samples; carries the last value and the last difference.
    """
    T = inp.time_box
    order = int(start_order)
    previous = None
    last_diff = float("inf")
    evaluations = 0
    extremes = [1.0, 0.0]
    while True:
        samples_needed = order * order * 2 * order
        if samples_needed > max_evaluations:
            raise BudgetExceeded(
                f"decomposition quadrature needs {samples_needed} samples at order {order} "
                f"(budget {max_evaluations}); last difference {last_diff:.2e}",
                partial=previous,
                bound=last_diff,
            )
        rule = _gauss(order)
        t_nodes, t_w = _gauss_on(rule, 0.0, T)
        inner, (lo, hi), tail = _integrand_grid(inp, t_nodes, t_nodes, rule, _TAU_RULE, _BETA_RULE)
        evaluations += samples_needed
        extremes = [min(extremes[0], lo), max(extremes[1], hi)]
        value = float(t_w @ inner @ t_w)
        truncation = float(t_w @ tail @ t_w)
        if previous is not None:
            last_diff = abs(value - previous)
            if last_diff <= tol * max(abs(value), 1.0):
                return DecompositionResult(value, last_diff, truncation, evaluations, extremes[0], extremes[1])
        previous = value
        order = order + max(order // 2, 1)


def integrand_samples(inp, eps, t, u):
    """``P1 * P2`` at individual points, computed with the scalar adaptive routines."""
    eps, t, u = np.broadcast_arrays(np.asarray(eps, float), np.asarray(t, float), np.asarray(u, float))
    out = np.empty(eps.shape)
    for idx in np.ndindex(eps.shape):
        e, ti, ui = float(eps[idx]), float(t[idx]), float(u[idx])
        if inp.variant is Variant.BASIC:
            out[idx] = p1_basic(e, ti, ui, inp.a) * p2_basic(e, ti, ui, inp.b, inp.spec)
        else:
            out[idx] = p1_general(e, ti, ui, inp) * p2_general(e, ti, ui, inp)
    return out
