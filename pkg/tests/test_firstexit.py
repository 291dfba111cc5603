from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from exitlab import firstexit as fe
from exitlab import levy
from exitlab.exceptions import (
    ClosedFormUnavailable,
    DomainError,
    GridMismatch,
    NumericalBlowup,
    PoleError,
    TrivialExit,
)
from exitlab.grids import DensityCurve, Grid

from conftest import CATALOG


# --- Brownian exits ---------------------------------------------------------

def test_levy_density_value():
    curve = fe.brownian_exit_density(1.0, 0.0, 1.0, (1.0, 1.0, 1))
    assert curve.values[0] == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), abs=1e-12)
    assert curve.values[0] == pytest.approx(0.241971, abs=1e-6)


def test_ig_density_mass_and_mean():
    curve = fe.brownian_exit_density(1.0, -1.0, 1.0, (0.0, 1e-3, 80001))
    assert curve.integral() == pytest.approx(1.0, abs=1e-6)
    assert curve.mean() == pytest.approx(1.0, abs=1e-6)


def test_ig_matches_scipy_invgauss():
    x = np.linspace(0.05, 6.0, 40)
    a, mu, sigma = 1.3, -0.7, 0.9
    mean, shape = a / -mu, (a / sigma) ** 2
    oracle = stats.invgauss(mean / shape, scale=shape).cdf(x)
    assert np.allclose(fe.brownian_exit_cdf(a, mu, sigma, x), oracle, atol=1e-12)


def test_levy_cdf_closed_form():
    x = np.array([0.1, 1.0, 10.0])
    assert np.allclose(fe.brownian_exit_cdf(2.0, 0.0, 1.0, x), special.erfc(2.0 / np.sqrt(2 * x)), atol=1e-15)


def test_brownian_positive_drift_rejected():
    with pytest.raises(DomainError):
        fe.brownian_exit_density(1.0, 0.5, 1.0, (0.0, 0.1, 10))


def test_trivial_query():
    model = levy.ModelParams(mu=0.0, sigma=1.0, rho=0.0, lam=1.0)
    with pytest.raises(TrivialExit):
        fe.ExitTimeQuery(0.0, 1.0, model, levy.GammaBDLP(1.0, 1.0))
    with pytest.raises(TrivialExit):
        fe.ExitTimeQuery(1.0, -2.0, model, levy.GammaBDLP(1.0, 1.0))


# --- Gamma BDLP closed form -------------------------------------------------

def test_gamma_bdlp_small_level():
    curve = fe.exit_density_closed(levy.GammaBDLP(1.0, 1.0), 1e-14, (1.0, 1.0, 1))
    assert curve.values[0] == pytest.approx(math.exp(-1.0), rel=1e-10)


def test_gamma_bdlp_at_zero_elapsed_time():
    nu, alpha, t = 1.5, 0.8, 2.0
    curve = fe.exit_density_closed(levy.GammaBDLP(nu, alpha), t, (0.0, 1.0, 1))
    assert curve.values[0] == pytest.approx(nu * math.exp(-alpha * t), rel=1e-13)


def test_gamma_bdlp_bessel_example():
    curve = fe.exit_density_closed(levy.GammaBDLP(2.0, 1.0), 1.0, (1.0, 1.0, 1))
    expected = 2.0 * math.exp(-3.0) * special.i0(2.0 * math.sqrt(2.0))
    assert curve.values[0] == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_gamma_bdlp_closed_vs_numeric(t):
    spec = levy.GammaBDLP(1.3, 0.7)
    grid = Grid(0.0, 0.1, 51)
    closed = fe.exit_density_closed(spec, t, grid)
    numeric = fe.exit_density_numeric(spec, t, grid)
    assert np.max(np.abs(closed.values - numeric.values)) <= 1e-7


@pytest.mark.parametrize(
    "spec",
    [levy.IGBDLP(1.0, 1.0), levy.PTSStationary(1.0, 0.5, 1.0), levy.PTSBDLP(1.0, 0.5, 1.0)],
    ids=str,
)
def test_closed_vs_numeric_special_laws(spec):
    grid = Grid(0.5, 0.75, 3)
    closed = fe.exit_density_closed(spec, 1.0, grid)
    numeric = fe.exit_density_numeric(spec, 1.0, grid)
    assert np.max(np.abs(closed.values - numeric.values)) <= 1e-5


def test_gamma_stationary_closed_unavailable():
    with pytest.raises(ClosedFormUnavailable):
        fe.exit_density_closed(levy.GammaStationary(1.0, 1.0), 1.0, (0.5, 0.5, 3))


def test_gamma_stationary_as_printed_degenerate():
    with pytest.raises((PoleError, ClosedFormUnavailable)):
        fe.exit_density_closed(levy.GammaStationary(1.0, 1.0), 1.0, (0.5, 0.5, 3), as_printed=True)


def test_ig_stationary_has_no_closed_form():
    with pytest.raises(ClosedFormUnavailable):
        fe.exit_density_closed(levy.IGStationary(1.0, 1.0), 1.0, (0.5, 0.5, 3))


def test_pts_bdlp_as_printed_unavailable():
    with pytest.raises(ClosedFormUnavailable):
        fe.exit_density_closed(levy.PTSBDLP(1.0, 0.5, 1.0), 1.0, (0.5, 0.5, 3), as_printed=True)


def test_pts_non_integer_reciprocal_index_unavailable():
    with pytest.raises(ClosedFormUnavailable):
        fe.exit_density_closed(levy.PTSStationary(1.0, 0.3, 1.0), 1.0, (0.5, 0.5, 3))


# --- numeric path -----------------------------------------------------------

@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_numeric_density_normalised(catalog_spec, t):
    curve = fe.exit_density_numeric(catalog_spec, t, Grid(0.0, 0.02, 1501))
    assert curve.integral() == pytest.approx(1.0, abs=1e-3)


def test_numeric_density_atom_at_zero_is_tail(catalog_spec):
    t = 0.7
    curve = fe.exit_density_numeric(catalog_spec, t, Grid(0.0, 0.5, 3))
    assert curve.values[0] == pytest.approx(float(catalog_spec.tail(t)), rel=1e-12)


@given(
    name=st.sampled_from(sorted(CATALOG)),
    t=st.floats(0.2, 3.0),
    x1=st.floats(0.05, 5.0),
    dx=st.floats(0.01, 5.0),
)
def test_cdf_non_increasing_in_level(name, t, x1, dx):
    spec = CATALOG[name]
    # a higher barrier is exited later, so P(T_t <= x) falls as t grows
    low = fe.exit_cdf(spec, t, [x1])[0]
    high = fe.exit_cdf(spec, t * 1.5, [x1])[0]
    assert high <= low + 1e-8
    # and the distribution function is non-decreasing in x
    assert fe.exit_cdf(spec, t, [x1 + dx])[0] >= low - 1e-8


def test_pure_drift_concentrates_at_level():
    # psi(s) = s: the exit time over level t is exactly t
    x = np.linspace(0.2, 2.0, 10)
    values = fe.exit_density_values(lambda s: s, 2.0, x)
    assert np.argmax(values) == len(x) - 1
    assert np.max(np.abs(values[:-2])) < 1e-3 * values[-1]
    with pytest.raises(NumericalBlowup):
        fe.exit_density_values(lambda s: s, 2.0, [4.0])


def test_density_values_reject_non_positive_x():
    with pytest.raises(DomainError):
        fe.exit_density_values(levy.GammaBDLP(1.0, 1.0), 1.0, [0.0, 1.0])


def test_dispatch_paths():
    spec = levy.GammaBDLP(1.0, 1.0)
    closed, numeric = fe.exit_density(spec, 1.0, "0:0.5:5", path="both")
    assert np.allclose(closed.values, numeric.values, atol=1e-7)
    with pytest.raises(DomainError):
        fe.exit_density(spec, 1.0, "0:0.5:5", path="sideways")


# --- convolution ------------------------------------------------------------

def _curve(fn, step=1e-3, count=4001, **kw):
    x = step * np.arange(count)
    return DensityCurve(0.0, step, fn(x), **kw)


def test_convolve_exponentials():
    e = _curve(lambda x: np.exp(-x))
    out = fe.convolve(e, e)
    x = out.points()
    assert np.max(np.abs(out.values - x * np.exp(-x))) <= 1e-6


def test_convolve_atom_is_identity():
    e = _curve(lambda x: np.exp(-x))
    delta = _curve(np.zeros_like, atom=1.0)
    out = fe.convolve(delta, e)
    assert np.allclose(out.values, e.values, atol=1e-15)


def test_convolve_associative():
    f = _curve(lambda x: np.exp(-x), count=801)
    g = _curve(lambda x: x * np.exp(-2 * x), count=801)
    h = _curve(lambda x: np.exp(-0.5 * x) * (1 + np.sin(x)), count=801)
    left = fe.convolve(fe.convolve(f, g), h)
    right = fe.convolve(f, fe.convolve(g, h))
    assert np.max(np.abs(left.values - right.values)) <= 1e-8


def test_convolve_singular_product_integration():
    # x^{-1/2} * x^{-1/2} = pi on (0, inf)
    step, count = 1e-2, 201
    x = step * np.arange(count)
    with np.errstate(divide="ignore"):
        v = np.where(x > 0, x**-0.5, np.inf)
    f = DensityCurve(0.0, step, v, exponent=0.5)
    out = fe.convolve(f, f)
    assert np.allclose(out.values, math.pi, atol=1e-12)


def test_convolve_grid_mismatch():
    with pytest.raises(GridMismatch):
        fe.convolve(_curve(np.exp, count=10), _curve(np.exp, count=11))
    with pytest.raises(GridMismatch):
        fe.convolve(_curve(np.exp, count=10), _curve(np.exp, step=2e-3, count=10))


# --- moments ----------------------------------------------------------------

def test_gamma_mean_small_level():
    values = [fe.exit_moment_gamma(1.0, t, 1.0, 1.0) for t in (1e-2, 1e-4, 1e-6)]
    assert values[0] > values[1] > values[2]
    # int_0^inf P(u, y) du ~ int y**u du = 1 / |log y| as y -> 0
    assert values[2] * abs(math.log(1e-6)) == pytest.approx(1.0, abs=0.05)


def test_gamma_mean_matches_numeric_density():
    # the mean formula belongs to the Gamma process, psi(s) = nu log(1 + s / alpha)
    nu, alpha, t = 1.0, 1.0, 1.0
    closed = fe.exit_moment_gamma(1.0, t, nu, alpha)
    spec = levy.GammaStationary(nu, alpha)
    curve = fe.exit_density_numeric(spec, t, Grid(0.0, 1e-3, 40001))
    assert closed == pytest.approx(curve.mean(), abs=1e-4)
    assert closed == pytest.approx(fe.exit_moment_numeric(spec, t), rel=1e-8)


def test_gamma_bdlp_mean_differs_from_gamma_process_mean():
    # the Bessel-law density has mean (1 + alpha t) / nu, not the Gamma-process mean
    curve = fe.exit_density_closed(levy.GammaBDLP(1.0, 1.0), 1.0, Grid(0.0, 1e-3, 60001))
    assert curve.mean() == pytest.approx(2.0, abs=1e-6)
    assert fe.exit_moment_gamma(1.0, 1.0, 1.0, 1.0) < 1.5


@given(c=st.floats(0.1, 10.0), t=st.floats(0.1, 5.0))
def test_gamma_mean_scaling(c, t):
    base = fe.exit_moment_gamma(1.0, t, 1.3, 0.8)
    assert fe.exit_moment_gamma(1.0, t / c, 1.3, 0.8 * c) == pytest.approx(base, rel=1e-8)
    assert fe.exit_moment_gamma(1.0, t, 1.3 * c, 0.8) == pytest.approx(base / c, rel=1e-8)
