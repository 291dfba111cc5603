"""First-exit-time densities, distribution functions and moments.

Orientation: ``h(x, t)`` is the density of the exit time ``T_t = inf{x :
Z_x >= t}`` in the elapsed time ``x`` at a fixed barrier level ``t``.  Its
Laplace transform in the level variable is ``psi(s) exp(-x psi(s)) / s``,
which is the reading consistent with ``P(T_t <= x) = P(Z_x >= t)``.

Two evaluation paths are provided.  The numeric path inverts the level
transform on the modified Talbot contour and is the reference.  The closed
path assembles the density from special functions: a Bessel product for
the Gamma BDLP, and convolutions in the level variable of explicit factors
for the IG and PTS laws.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy import special as _sp

from . import exceptions, laplace, specfun
from ._validation import check_finite, check_positive
from .exceptions import ClosedFormUnavailable, DomainError, NonConvergence, PoleError, TrivialExit
from .grids import DensityCurve, Grid, _regular_factor, product_weights, same_grid
from .levy import (
    GammaBDLP,
    GammaStationary,
    IGBDLP,
    IGStationary,
    LaplaceExponent,
    ModelParams,
    PTSBDLP,
    PTSStationary,
    SubordinatorSpec,
    laplace_exponent,
)

__all__ = [
    "ExitTimeQuery",
    "brownian_exit_density",
    "brownian_exit_cdf",
    "exit_density_closed",
    "exit_density_numeric",
    "exit_density_values",
    "exit_density",
    "exit_cdf",
    "exit_tail",
    "convolve",
    "exit_moment_gamma",
    "exit_moment_numeric",
]

logger = logging.getLogger(__name__)

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ExitTimeQuery:
    """Barrier components and evaluation grid for the decomposed exit problem.

    Raises
    ------
    TrivialExit
        When ``a <= 0`` or ``b <= 0``: every exit time is then zero.
    """

    a: float
    b: float
    model: ModelParams
    spec: SubordinatorSpec
    grid: Grid | None = None

    def __post_init__(self):
        check_finite(self.a, "a")
        check_finite(self.b, "b")
        if self.a <= 0 or self.b <= 0:
            raise TrivialExit(f"barriers a={self.a}, b={self.b} are not both positive; exit times are 0")


def _grid_of(grid):
    if isinstance(grid, Grid):
        return grid
    if isinstance(grid, str):
        return Grid.parse(grid)
    start, step, count = grid
    return Grid(start, step, count)


# ---------------------------------------------------------------------------
# Brownian motion with drift

def _brownian_params(a, mu, sigma):
    a = check_positive(a, "a")
    sigma = check_positive(sigma, "sigma")
    mu = check_finite(mu, "mu")
    if mu > 0:
        raise DomainError("drift mu > 0 points away from the barrier; only mu <= 0 is supported")
    return a / sigma, -mu / sigma


def brownian_exit_cdf(a, mu, sigma, x):
    """``P(B_a <= x)`` for ``B_a = inf{s : mu s + sigma W_s <= -a}``, ``mu <= 0``.

    This is the inverse Gaussian IG(a/sigma, -mu/sigma) distribution
    function, or the Lévy distribution ``erfc(a / (sigma sqrt(2 x)))`` when
    ``mu = 0``.
    """
    delta, gamma = _brownian_params(a, mu, sigma)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    root = np.sqrt(xp)
    if gamma == 0.0:
        out[pos] = _sp.erfc(delta / np.sqrt(2.0 * xp))
    else:
        first = _sp.ndtr((gamma * xp - delta) / root)
        second = np.exp(2.0 * delta * gamma + _sp.log_ndtr(-(gamma * xp + delta) / root))
        out[pos] = first + second
    return float(out) if out.ndim == 0 else out


def brownian_exit_density(a, mu, sigma, grid):
    """Density of ``B_a`` on ``grid``.

    ``mu < 0`` gives IG(a/sigma, -mu/sigma); ``mu = 0`` gives the Lévy law
    ``a / (sigma sqrt(2 pi x**3)) exp(-a**2 / (2 sigma**2 x))``, which has
    no finite mean.
    """
    delta, gamma = _brownian_params(a, mu, sigma)
    grid = _grid_of(grid)
    x = grid.points()
    values = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    log_h = (
        math.log(delta)
        - 0.5 * math.log(2.0 * math.pi)
        - 1.5 * np.log(xp)
        - 0.5 * (delta - gamma * xp) ** 2 / xp
    )
    values[pos] = np.exp(log_h)
    tail = 1.0 - brownian_exit_cdf(a, mu, sigma, grid.stop)
    return DensityCurve(grid.start, grid.step, values, tail_mass=float(tail), label="brownian exit")


# ---------------------------------------------------------------------------
# convolution engine

def convolve(f, g):
    """Finite convolution ``(f * g)(t) = int_0^t f(tau) g(t - tau) dtau`` on a shared grid.

    Power-law singularities at the origin (``exponent``) are integrated by
    product integration with incomplete-beta moments, atoms are convolved
    analytically, and the smooth remainder is interpolated linearly on each
    cell, which reduces to the trapezoid rule for regular curves.

    Raises
    ------
    GridMismatch
        When the two curves are not sampled on the same grid.
    """
    same_grid(f, g)
    if f.grid_start != 0.0:
        raise DomainError("convolution grids must start at 0")
    n = len(f.values)
    h = f.grid_step
    e1, e2 = f.exponent, g.exponent
    phi_f = f.smooth_part()
    phi_g = g.smooth_part()
    weights = product_weights(n, e1, e2)
    k = np.arange(n)
    lag = k[:, None] - k[None, :]
    mask = lag >= 0
    pairs = np.where(mask, phi_f[None, :] * phi_g[np.clip(lag, 0, None)], 0.0)
    out = h ** (1.0 - e1 - e2) * np.einsum("ki,ki->k", weights, pairs)

    exponents = [max(e1 + e2 - 1.0, 0.0)]
    if f.atom:
        exponents.append(e2)
    if g.atom:
        exponents.append(e1)
    exponent = max(exponents)
    with np.errstate(invalid="ignore"):
        if f.atom:
            out = out + f.atom * g.values
        if g.atom:
            out = out + g.atom * f.values
    if exponent > 0:
        out[0] = np.inf
    else:
        # the continuous part tends to phi_f(0) phi_g(0) B(1 - e1, 1 - e2) when e1 + e2 = 1, else to 0
        start = phi_f[0] * phi_g[0] * _sp.beta(1.0 - e1, 1.0 - e2) if math.isclose(e1 + e2, 1.0) else 0.0
        out[0] = start + (f.atom * g.values[0] if f.atom else 0.0) + (g.atom * f.values[0] if g.atom else 0.0)
    if exponent > 0 and not np.isfinite(out[1:]).all():
        raise DomainError("convolution produced non-finite values away from the origin")
    return DensityCurve(0.0, h, out, atom=f.atom * g.atom, exponent=exponent)


def _grid_factor(curve):
    """Regular part ``u**e * curve(u)`` of a sampled curve, interpolated linearly."""
    points, smooth = curve.points(), curve.smooth_part()
    return lambda u: np.interp(u, points, smooth)


def _convolve_at_end(weight_fn, regular_fn, exponent, t, *, atom=0.0, peak=None):
    """``int_0^t w(tau) c(t - tau) dtau + atom * w(t)`` for ``c(u) = u**-exponent * regular_fn(u)``.

    ``weight_fn`` is analytic and may be sharply peaked near the origin;
    the power-law singularity of ``c`` at ``tau = t`` is handled by an
    algebraic quadrature weight on the right half of the interval.
    """
    half = 0.5 * t
    points = None if peak is None or not 0 < peak < half else [peak]
    opts = dict(limit=400, epsabs=1e-15, epsrel=1e-11)

    def first(tau):
        u = t - tau
        return weight_fn(tau) * regular_fn(u) * u**-exponent

    def second(tau):
        return weight_fn(tau) * regular_fn(t - tau)

    with warnings.catch_warnings():
        # roundoff warnings here mean the requested 1e-11 was not reached,
        # which is far below the interpolation error of the inner curve
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        v1, _ = integrate.quad(first, 0.0, half, points=points, **opts)
        if exponent > 0:
            v2, _ = integrate.quad(second, half, t, weight="alg", wvar=(0.0, -exponent), **opts)
        else:
            v2, _ = integrate.quad(second, half, t, **opts)
    total = v1 + v2
    if atom:
        total += atom * weight_fn(t)
    return total


# ---------------------------------------------------------------------------
# closed-form factors

def _ig_factors(spec, x):
    delta, gamma = spec.delta, spec.gamma
    shift = 0.5 * gamma**2
    attenuation = 0.5 * x * gamma * delta
    kappa = x * gamma**2 * delta / (2.0 * math.sqrt(2.0))
    spread = x * delta / math.sqrt(2.0)
    return shift, attenuation, kappa, spread


def _ig_q_continuous(spec, x, tau):
    """Absolutely continuous part of the IG ``q`` factor.

    Expanding the exponential in ``Q(s) = exp(-A + kappa / sqrt(s + c))``
    and inverting term by term gives ``exp(-A - c tau) sum_{n>=1} kappa**n
    tau**(n/2 - 1) / (n! Gamma(n/2))``; this is the Bessel-derivative
    integral evaluated in closed form.  The ``n = 0`` term is the atom
    ``exp(-A)`` at the origin.
    """
    shift, attenuation, kappa, _ = _ig_factors(spec, x)
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    pos = tau > 0
    tp = tau[pos]
    log_tau = np.log(tp)
    log_kappa = math.log(kappa)
    total = np.zeros_like(tp)
    n = 0
    while True:
        n += 1
        term = np.exp(n * log_kappa - math.lgamma(n + 1) - math.lgamma(0.5 * n) + (0.5 * n - 1.0) * log_tau)
        total += term
        if n > 4 and np.all(term <= 1e-17 * total):
            break
        if n > 2000:
            raise NonConvergence("IG q series did not converge")
    out[pos] = np.exp(-attenuation - shift * tp) * total
    return out


def _ig_r(spec, x, tau, as_printed=False):
    shift, attenuation, _, spread = _ig_factors(spec, x)
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    pos = tau > 0
    tp = tau[pos]
    if as_printed:
        d, g = spec.delta, spec.gamma
        out[pos] = (
            x * d * g**6 * np.exp(-shift * tp + attenuation - d**2 * x**2 * g**4 / (32.0 * tp))
            / (8.0 * _SQRT_PI * (2.0 * tp) ** 1.5)
        )
    else:
        out[pos] = spread * np.exp(attenuation - shift * tp - spread**2 / (4.0 * tp)) / (2.0 * _SQRT_PI * tp**1.5)
    return out


def _stable_density(scale, m, tau):
    """Inverse transform of ``exp(-(scale s)**(1/m))`` at ``tau``.

    Uses the conjugate MacRobert sum; where its error estimate exceeds
    ``1e-9`` of the value the point is recomputed by contour inversion.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.zeros_like(tau)
    pos = tau > 0
    if not np.any(pos):
        return out
    upper = [1.0 + j / m for j in range(m)]
    prefactor = m ** (0.5 + m) / ((2.0 * math.pi) ** ((m + 1) / 2.0) * scale)
    r = scale / (m**m * tau[pos])
    values = np.full(r.shape, np.nan)
    ok = r < 60.0
    if np.any(ok):
        try:
            pair = specfun.macrobert_conjugate_pair(upper, r[ok])
            good = pair.error <= 1e-9 * np.maximum(np.abs(pair.value), 1e-300)
            sub = np.full(ok.sum(), np.nan)
            sub[good] = prefactor * pair.value[good]
            values[ok] = sub
        except NonConvergence:
            pass
    fallback = np.isnan(values)
    if np.any(fallback):
        transform = laplace.TransformFn(lambda s: np.exp(-((scale * s) ** (1.0 / m))), 0.0)
        values[fallback] = laplace.talbot(transform, tau[pos][fallback], 32, shift=0.0)
    out[pos] = np.maximum(values, 0.0)
    return out


def _stable_index(gamma):
    m = round(1.0 / gamma)
    if m < 2 or abs(m * gamma - 1.0) > 1e-12:
        raise ClosedFormUnavailable(
            f"the MacRobert representation needs gamma = 1/m with integer m >= 2, got gamma={gamma}"
        )
    return m


def _pts_q(spec, strength, tau):
    """``exp(D) exp(-k**2 tau / 2) phi_B(tau)`` with ``D = strength`` and ``B = (D (2/k**2)**gamma)**(1/gamma)``."""
    m = _stable_index(spec.gamma)
    lam = spec.tilt
    scale = (strength * lam ** (-spec.gamma)) ** (1.0 / spec.gamma)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    return np.exp(strength - lam * tau) * _stable_density(scale, m, tau)


def _pts_r_continuous(spec, x, tau):
    """Continuous part of the Poisson-gamma ``r`` factor of the PTS BDLP."""
    g = spec.gamma
    lam = spec.tilt
    strength = x * spec.a * math.gamma(1.0 - g)
    shape = 1.0 - g
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    pos = tau > 0
    tp = tau[pos]
    log_tau = np.log(tp)
    total = np.zeros_like(tp)
    n = 0
    while True:
        n += 1
        a_n = n * shape
        term = np.exp(
            n * math.log(strength) - math.lgamma(n + 1) + a_n * math.log(lam) + (a_n - 1.0) * log_tau - math.lgamma(a_n)
        )
        total += term
        if n > 4 and np.all(term <= 1e-17 * total):
            break
        if n > 5000:
            raise NonConvergence("PTS r series did not converge")
    out[pos] = np.exp(-strength - lam * tp) * total
    return out, math.exp(-strength)


def _gamma_stationary_as_printed(spec, t, x):
    """Integral formula for integer ``x nu``; its hypergeometric factor has a pole there."""
    nu, alpha = spec.nu, spec.alpha
    n_float = x * nu
    n = round(n_float)
    if n < 1 or abs(n - n_float) > 1e-12:
        raise ClosedFormUnavailable(f"x nu must be a positive integer, got x nu = {n_float}")
    factor = specfun.hyp2f1_terminating(n, 1 - n, 1.0)
    power = n

    def integrand(u):
        return math.exp(-u * alpha) * alpha**power * (nu * (-u) ** power * factor + nu * u**power) / math.factorial(n - 1)

    value, _ = integrate.quad(integrand, 0.0, t)
    return value


def _tail_curve(spec, tau, exponent):
    values = np.empty_like(tau)
    values[0] = np.inf
    values[1:] = spec.tail(tau[1:])
    return DensityCurve(0.0, tau[1], values, exponent=exponent)


def _ig_inner(spec, x, tau, as_printed):
    """``p * q`` for the IG BDLP on the level grid ``tau``."""
    q_vals = _ig_q_continuous(spec, x, tau)
    q_vals[0] = np.inf
    atom = 0.0 if as_printed else math.exp(-0.5 * x * spec.gamma * spec.delta)
    q = DensityCurve(0.0, tau[1], q_vals, atom=atom, exponent=0.5)
    return convolve(_tail_curve(spec, tau, 0.5), q)


def _pts_inner(spec, x, tau):
    """``p * r`` for the PTS BDLP on the level grid ``tau``."""
    r_vals, r_atom = _pts_r_continuous(spec, x, tau)
    r_vals[0] = np.inf
    r = DensityCurve(0.0, tau[1], r_vals, atom=r_atom, exponent=spec.gamma)
    return convolve(_tail_curve(spec, tau, spec.gamma), r)


def _extrapolated_inner(build, t, level_steps):
    """Inner convolution on ``level_steps`` and ``level_steps / 2`` cells, Richardson-combined.

    The product integration is first order in the step because the regular
    parts carry square-root-type terms at the origin, so ``2 f_h - f_2h``
    cancels the leading error.  Returns the regular part as a callable,
    with the exponent and atom of the convolution.
    """
    n_fine = 2 * max(int(level_steps) // 2, 8)
    fine = build(t / n_fine * np.arange(n_fine + 1))
    coarse = build(t / (n_fine // 2) * np.arange(n_fine // 2 + 1))
    fine_fn, coarse_fn = _grid_factor(fine), _grid_factor(coarse)
    return (lambda u: 2.0 * fine_fn(u) - coarse_fn(u)), fine.exponent, fine.atom


def exit_density_closed(spec, t, grid, *, as_printed=False, level_steps=1000):
    """Exit density from the special-function representations.

    Parameters
    ----------
    spec : SubordinatorSpec
    t : float
        Barrier level.
    grid : Grid
        Elapsed-time grid.
    as_printed : bool
        Use the published factor formulas verbatim.  For the Gamma
        stationary law this is the only closed form and it raises
        :class:`PoleError`; for the IG BDLP it uses the published ``r``
        factor and drops the atom of ``q``.
    level_steps : int
        Number of cells of the finer level grid on which inner convolutions
        run; a second grid with half as many cells feeds a Richardson step.

    Raises
    ------
    ClosedFormUnavailable
        For laws or parameters without a representation (Gamma stationary
        unless ``as_printed``, PTS with ``1/gamma`` not an integer, the
        published PTS BDLP ``r`` factor).
    PoleError
        From the terminating hypergeometric sum of the Gamma stationary
        formula.
    """
    t = check_positive(t, "level t")
    grid = _grid_of(grid)
    x_values = grid.points()
    values = np.empty(len(x_values))

    if isinstance(spec, GammaBDLP):
        nu, alpha = spec.nu, spec.alpha
        z = 2.0 * np.sqrt(x_values * nu * alpha * t)
        # nu e^{-x nu} I0(z) e^{-alpha t} = nu i0e(z) exp(-(sqrt(x nu) - sqrt(alpha t))^2)
        values = nu * specfun.bessel_i0e(z) * np.exp(-((np.sqrt(x_values * nu) - math.sqrt(alpha * t)) ** 2))
        return DensityCurve(grid.start, grid.step, np.atleast_1d(values), label=f"{spec} closed")

    if isinstance(spec, GammaStationary):
        if not as_printed:
            raise ClosedFormUnavailable(
                "the Gamma stationary closed form is degenerate on its own domain; use the numeric path"
            )
        for i, xv in enumerate(x_values):
            values[i] = _gamma_stationary_as_printed(spec, t, xv)
        return DensityCurve(grid.start, grid.step, values, label=f"{spec} as printed")

    if isinstance(spec, IGStationary):
        raise ClosedFormUnavailable("no factorised closed form is tabulated for the IG stationary law")

    if isinstance(spec, IGBDLP):
        for i, xv in enumerate(x_values):
            if xv == 0.0:
                values[i] = float(spec.tail(t))
                continue
            regular, exponent, atom = _extrapolated_inner(
                lambda tau, xv=xv: _ig_inner(spec, xv, tau, as_printed), t, level_steps
            )
            values[i] = _convolve_at_end(
                lambda s, xv=xv: float(_ig_r(spec, xv, s, as_printed)),
                regular,
                exponent,
                t,
                atom=atom,
                peak=(xv * spec.delta) ** 2 / 12.0,
            )
        return DensityCurve(grid.start, grid.step, values, label=f"{spec} closed")

    if isinstance(spec, PTSStationary):
        spec._need_tilt()
        _stable_index(spec.gamma)
        g = spec.gamma

        def regular_tail(u):
            return u**g * float(spec.tail(u)) if u > 0 else spec.a * spec.tilt**-g / g

        for i, xv in enumerate(x_values):
            if xv == 0.0:
                values[i] = float(spec.tail(t))
                continue
            strength = -xv * spec.a * math.gamma(-g)
            values[i] = _convolve_at_end(lambda s, d=strength: float(_pts_q(spec, d, s)[0]), regular_tail, g, t)
        return DensityCurve(grid.start, grid.step, values, label=f"{spec} closed")

    if isinstance(spec, PTSBDLP):
        spec._need_tilt()
        if as_printed:
            raise ClosedFormUnavailable(
                "the published r factor of the PTS BDLP density cannot be evaluated "
                "(negative MacRobert order and an ill-formed parameter list)"
            )
        _stable_index(spec.gamma)
        g = spec.gamma
        for i, xv in enumerate(x_values):
            if xv == 0.0:
                values[i] = float(spec.tail(t))
                continue
            regular, exponent, atom = _extrapolated_inner(lambda tau, xv=xv: _pts_inner(spec, xv, tau), t, level_steps)
            strength = -xv * spec.a * g * math.gamma(-g)
            values[i] = _convolve_at_end(
                lambda s, d=strength: float(_pts_q(spec, d, s)[0]), regular, exponent, t, atom=atom
            )
        return DensityCurve(grid.start, grid.step, values, label=f"{spec} closed")

    raise ClosedFormUnavailable(f"no closed form for {spec!r}")


# ---------------------------------------------------------------------------
# numeric inversion path

def _exponent_of(spec):
    if isinstance(spec, SubordinatorSpec):
        return laplace_exponent(spec)
    if isinstance(spec, LaplaceExponent):
        return spec
    if callable(spec):
        return spec
    raise DomainError(f"cannot build a Laplace exponent from {spec!r}")


def _exp_parts(psi):
    evaluator = getattr(psi, "evaluator", psi)
    abscissa = float(getattr(psi, "abscissa", 0.0))
    return evaluator, abscissa


def _psi_on_nodes(spec, t, settings, order=None):
    # contour at abscissa 0; see laplace.exit_density_transform
    evaluator, _ = _exp_parts(_exponent_of(spec))
    z, w = laplace.inversion_nodes([t], settings.method, order or settings.order, shift=0.0)
    return evaluator(z[0]), z[0], w[0]


def _density_on_nodes(spec, t, x, settings, order=None):
    psi_z, z, w = _psi_on_nodes(spec, t, settings, order)
    with np.errstate(over="ignore", invalid="ignore"):
        transform = psi_z[None, :] * np.exp(-x[:, None] * psi_z[None, :]) / z[None, :]
        growth = np.abs(w[None, :] * transform).sum(axis=1)
    origin = np.abs(w * psi_z / z).sum()
    # exp(-x psi) must stay bounded on the contour; a pure drift psi(s) = s
    # violates this for x > t, where the contour sum has no digits left
    if not np.all(np.isfinite(growth)) or np.any(growth > origin / math.sqrt(np.finfo(float).eps)):
        worst = float(x[np.argmax(np.where(np.isfinite(growth), growth, np.inf))])
        raise exceptions.NumericalBlowup(
            f"inversion terms grow without bound at x = {worst:g}; exp(-x psi) is not bounded on the contour"
        )
    totals = laplace.combine_nodes(transform, w[None, :], settings.method, reference=np.inf)
    return laplace.combine_nodes(
        transform, w[None, :], settings.method, reference=float(np.max(np.abs(totals)))
    )


def exit_density_values(spec, t, x, settings=None):
    """Raw inverted exit-density values at elapsed times ``x > 0``.

    Unlike :func:`exit_density_numeric` no :class:`DensityCurve` is built,
    so ringing from laws without a density (a pure drift, whose exit time
    is a point mass) is returned as is rather than rejected.
    """
    settings = settings or laplace.InversionSettings()
    t = check_positive(t, "level t")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise DomainError("elapsed times must be positive")
    return _density_on_nodes(spec, t, x, settings)


def exit_tail(spec, t, x, settings=None):
    """``P(T_t > x) = P(Z_x < t)`` by inversion of ``exp(-x psi(s)) / s``."""
    settings = settings or laplace.InversionSettings()
    t = check_positive(t, "level t")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi_z, z, w = _psi_on_nodes(spec, t, settings)
    out = np.ones_like(x)
    pos = x > 0
    values = np.exp(-x[pos, None] * psi_z[None, :]) / z[None, :]
    out[pos] = laplace.combine_nodes(values, w[None, :], settings.method)
    return np.clip(out, 0.0, 1.0)


def exit_cdf(spec, t, x, settings=None):
    """``P(T_t <= x)`` at elapsed times ``x``."""
    result = 1.0 - exit_tail(spec, t, x, settings)
    return result


def exit_density_numeric(spec, t, grid, settings=None):
    """Exit density by numerical inversion of the level transform at each grid ``x``.

    The curve's ``tail_mass`` is ``P(T_t > x_max)`` from the same
    inversion machinery, so ``integral()`` checks normalisation.
    """
    settings = settings or laplace.InversionSettings()
    t = check_positive(t, "level t")
    grid = _grid_of(grid)
    x = grid.points()
    values = np.empty_like(x)
    pos = x > 0
    values[pos] = _density_on_nodes(spec, t, x[pos], settings)
    if np.any(~pos):
        if isinstance(spec, SubordinatorSpec):
            values[~pos] = float(spec.tail(t))
        else:
            psi_z, z, w = _psi_on_nodes(spec, t, settings)
            scale = float(np.max(np.abs(values[pos]))) if np.any(pos) else None
            values[~pos] = laplace.combine_nodes(psi_z / z, w, settings.method, reference=scale)
    negative = values < 0
    if np.any(negative) and settings.method is laplace.InversionMethod.TALBOT:
        # negatives inside the inversion's own error estimate are noise
        check_order = settings.order + 16 if settings.order <= 48 else settings.order - 16
        noise = np.zeros_like(values)
        idx = np.flatnonzero(negative & pos)
        noise[idx] = np.abs(values[idx] - _density_on_nodes(spec, t, x[idx], settings, check_order))
        within = negative & (np.abs(values) <= 10.0 * noise)
        if np.any(within):
            logger.warning("clamping %d negative inversion values within the error estimate", int(within.sum()))
            values[within] = 0.0
    tail = float(exit_tail(spec, t, grid.stop, settings)[0]) if grid.stop > 0 else 1.0
    return DensityCurve(grid.start, grid.step, values, tail_mass=tail, label=f"{spec} numeric")


def exit_density(spec, t, grid, path="numeric", **kwargs):
    """Dispatch to the ``closed`` or ``numeric`` path (``both`` returns a pair)."""
    if path == "numeric":
        return exit_density_numeric(spec, t, grid, kwargs.get("settings"))
    if path == "closed":
        return exit_density_closed(spec, t, grid, **{k: v for k, v in kwargs.items() if k != "settings"})
    if path == "both":
        closed = exit_density_closed(spec, t, grid, **{k: v for k, v in kwargs.items() if k != "settings"})
        return closed, exit_density_numeric(spec, t, grid, kwargs.get("settings"))
    raise DomainError(f"unknown path {path!r}; expected closed, numeric or both")


# ---------------------------------------------------------------------------
# moments

def exit_moment_gamma(x, t, nu, alpha, *, tol=1e-10):
    """Mean exit time of the Gamma subordinator over level ``t``.

    The double integral of the published mean formula is evaluated with the
    integration order swapped: integrating the level-type variable first
    gives ``m(t) = (1/nu) int_0^inf P(u, alpha t) du`` with ``P`` the
    regularized lower incomplete gamma function.  ``x`` does not enter the
    result and is accepted for signature compatibility.

    Raises
    ------
    NonConvergence
        When the quadrature error exceeds ``tol`` (relative); the exception
        carries the partial value and the achieved error.
    """
    del x
    t = check_positive(t, "level t", strict=False)
    nu = check_positive(nu, "nu")
    alpha = check_positive(alpha, "alpha")
    y = alpha * t
    if y == 0.0:
        return 0.0

    def integrand(u):
        return _sp.gammainc(u, y) if u > 0 else 1.0

    # P(u, y) is ~1 for u << y and decays faster than geometrically beyond u ~ y
    upper = y + 10.0 * math.sqrt(y) + 40.0
    while integrand(upper) > 1e-16 * integrand(0.0) * 1e-1 and upper < 1e7:
        upper *= 1.5
    pts = [min(y, upper / 2)] if y > 0 else None
    value, err = integrate.quad(integrand, 0.0, upper, points=pts, limit=500, epsabs=0.0, epsrel=tol * 0.1)
    if err > tol * max(abs(value), 1e-300):
        raise NonConvergence(f"mean exit-time quadrature reached only {err:.2e}", partial=value / nu, error=err / nu)
    return value / nu


def exit_moment_numeric(spec, t, q=1.0, settings=None):
    """``E[T_t**q]`` by inverting ``Gamma(1+q) / (s psi(s)**q)``."""
    settings = settings or laplace.InversionSettings()
    psi = _exponent_of(spec)
    transform = laplace.moment_transform(psi, q, as_printed=False)
    return float(laplace.invert_values(transform, [t], settings.method, settings.order)[0])
