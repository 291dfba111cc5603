from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from conftest import CATALOG
from exitlab import laplace, levy
from exitlab.exceptions import DivergentCumulant, DomainError, ParseError


def test_levy_density_examples():
    assert abs(levy.levy_density(levy.GammaBDLP(1, 1), 1.0) - math.exp(-1)) < 1e-16
    assert abs(levy.levy_density(levy.GammaStationary(2, 3), 1.0) - 2 * math.exp(-3)) < 1e-16
    for spec in CATALOG.values():
        assert spec.density(200.0) < 1e-40


def test_levy_density_rejects_nonpositive():
    with pytest.raises(DomainError):
        levy.GammaBDLP(1, 1).density(0.0)


@pytest.mark.parametrize("tag", ["gamma-stat", "ig-stat", "pts-stat"])
def test_stationary_small_jump_integrability(tag):
    spec = CATALOG[tag]
    small = integrate.quad(lambda x: x * spec.density(x), 0, 1, limit=200)[0]
    large = integrate.quad(spec.density, 1, np.inf)[0]
    assert np.isfinite(small) and np.isfinite(large)


X100 = np.logspace(-3, 1.5, 100)


@pytest.mark.parametrize(
    "stationary",
    [levy.GammaStationary(1.3, 0.7), levy.IGStationary(0.8, 1.7), levy.PTSStationary(1.2, 0.4, 1.5)],
    ids=lambda s: s.tag,
)
def test_bdlp_closure(stationary):
    w = levy.bdlp_from_stationary(stationary.density, stationary.density_derivative)
    target = levy.bdlp_counterpart(stationary).density(X100)
    assert np.max(np.abs(w(X100) / target - 1.0)) < 1e-12


def test_integrated_tail_examples():
    assert abs(levy.integrated_tail(levy.GammaBDLP(1, 1), 1e-14) - 1.0) < 1e-13
    assert abs(levy.integrated_tail(levy.GammaBDLP(2, 3), 1.0) - 2 * math.exp(-3)) < 1e-16
    spec = levy.IGBDLP(1, 1)
    quad = integrate.quad(spec.density, 1.0, np.inf, epsabs=0, epsrel=1e-13)[0]
    assert abs(quad - spec.tail(1.0)) < 1e-10


@pytest.mark.parametrize("tag", sorted(CATALOG))
@pytest.mark.parametrize("t", [0.1, 1.0, 4.0])
def test_integrated_tail_matches_quadrature(tag, t):
    spec = CATALOG[tag]
    quad = integrate.quad(spec.density, t, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert abs(quad - spec.tail(t)) <= 1e-9 * quad


def test_laplace_exponent_examples():
    assert abs(levy.laplace_exponent(levy.GammaStationary(1, 1))(1.0) - math.log(2)) < 1e-15
    assert abs(levy.laplace_exponent(levy.GammaBDLP(1, 1))(1.0) - 0.5) < 1e-15
    for spec in CATALOG.values():
        assert levy.laplace_exponent(spec)(0.0) == 0.0


@pytest.mark.parametrize("tag", sorted(CATALOG))
@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 5.0])
def test_exponent_is_transform_of_tail(tag, s):
    spec = CATALOG[tag]
    res = laplace.forward(lambda t: float(spec.tail(t)) if t > 0 else 0.0, s, cutoff=60.0 / s)
    assert abs(s * res.value - float(np.real(spec.psi(s)))) < 1e-8


@pytest.mark.parametrize("tag", sorted(CATALOG))
def test_exponent_derivatives(tag):
    spec = CATALOG[tag]
    h = 1e-4
    fd1 = (spec.psi(h) - spec.psi(-h)) / (2 * h)
    fd2 = (spec.psi(h) - 2 * spec.psi(0.0) + spec.psi(-h)) / h**2
    assert abs(fd1 - spec.psi_derivative(0.0, 1)) < 1e-7
    assert abs(fd2 - spec.psi_derivative(0.0, 2)) < 1e-5


@given(
    st.sampled_from(["gamma-stat", "gamma-bdlp", "ig-stat", "ig-bdlp", "pts-stat", "pts-bdlp"]),
    st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(0.05, 0.95),
    st.floats(1e-3, 100.0), st.floats(1e-3, 100.0),
)
def test_exponent_monotone(tag, p1, p2, g, s1, s2):
    cls = type(CATALOG[tag])
    spec = cls(p1, g, p2) if "pts" in tag else cls(p1, p2)
    lo, hi = sorted((s1, s2))
    if hi - lo < 1e-9 * hi:
        return
    assert np.real(spec.psi(hi)) > np.real(spec.psi(lo))


def test_cumulant_examples():
    spec = levy.GammaBDLP(1, 1)
    assert levy.cumulant_kappa(spec, 0.0) == 0.0
    assert abs(levy.cumulant_kappa(spec, -1.0) + 0.5) < 1e-15
    with pytest.raises(DivergentCumulant):
        levy.cumulant_kappa(spec, 1.0)


def test_cumulant_matches_quadrature():
    spec = levy.IGBDLP(1, 2)
    theta = 0.7
    quad = integrate.quad(lambda x: math.expm1(theta * x) * spec.density(x), 0, 150, limit=200)[0]
    assert abs(quad - levy.cumulant_kappa(spec, theta)) < 1e-9


def test_risk_neutral_drift():
    spec = levy.GammaBDLP(1, 2)
    m = levy.ModelParams.risk_neutral(spec, sigma=0.2, rho=-0.5, lam=1.5, r=0.03)
    assert abs(m.mu - (0.03 - 1.5 * levy.cumulant_kappa(spec, -0.5) - 0.02)) < 1e-15


def test_ig_bdlp_split_reproduces_tail():
    spec = levy.IGBDLP(1.3, 0.9)
    cont = spec.continuous_part()
    t = np.array([0.05, 0.5, 2.0])
    # tail of the Gamma(1/2, gamma^2/2) jumps at rate delta gamma / 2
    from scipy import special

    jump_tail = spec.jump_rate * special.gammaincc(0.5, spec.tilt * t)
    assert np.allclose(cont.tail(t) + jump_tail, spec.tail(t), rtol=1e-12)


def test_pts_needs_tilt():
    # beta k**(-2 gamma) diverges at k = 0, so even the density needs k > 0
    spec = levy.PTSStationary(1.0, 0.5, 0.0)
    with pytest.raises(DomainError):
        spec.density(1.0)
    with pytest.raises(DomainError):
        spec.psi(1.0)
    with pytest.raises(DomainError):
        spec.sample(1.0, np.random.default_rng(0))


def test_parse_spec_and_model():
    assert levy.parse_spec("gamma-bdlp:nu=1,alpha=2") == levy.GammaBDLP(1, 2)
    assert levy.parse_spec("pts-bdlp:beta=1,gamma=0.5,k=1") == levy.PTSBDLP(1, 0.5, 1)
    with pytest.raises(ParseError, match="alpha"):
        levy.parse_spec("gamma-bdlp:nu=1,alhpa=2")
    with pytest.raises(ParseError, match="delta"):
        levy.parse_spec("ig-stat:gamma=1")
    with pytest.raises(ParseError, match="nu"):
        levy.parse_spec("gamma-stat:nu=-1,alpha=1")
    m = levy.parse_model("mu=-0.1,sigma=0.2,rho=-1,lambda=2")
    assert (m.mu, m.sigma, m.rho, m.lam) == (-0.1, 0.2, -1.0, 2.0)
    for spec in CATALOG.values():
        assert levy.parse_spec(spec.to_string()) == spec


def test_positive_rho_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        levy.ModelParams(rho=0.5)
    assert caught


# samplers --------------------------------------------------------------------

N = 10**6


@pytest.fixture(scope="module")
def draws():
    return {tag: spec.sample(1.0, np.random.default_rng(2024), size=N) for tag, spec in CATALOG.items()}


def test_gamma_bdlp_sample_mean(draws):
    assert abs(draws["gamma-bdlp"].mean() - 1.0) < 0.004


def test_ig_stationary_sample_mean(draws):
    z = draws["ig-stat"]
    assert abs(z.mean() - 1.0) < 3 * z.std() / math.sqrt(N)


@pytest.mark.parametrize("tag", sorted(CATALOG))
def test_sampler_matches_exponent(draws, tag):
    z = draws[tag]
    assert np.all(z >= 0)
    for s in (0.5, 1.0, 2.0):
        e = np.exp(-s * z)
        assert abs(e.mean() - math.exp(-float(np.real(CATALOG[tag].psi(s))))) < 4 * e.std() / math.sqrt(N)


@pytest.mark.parametrize("tag", sorted(CATALOG))
def test_sampler_moments(draws, tag):
    z = draws[tag]
    spec = CATALOG[tag]
    assert abs(z.mean() - spec.mean) < 4 * z.std() / math.sqrt(N)
    c = z - z.mean()
    se_var = math.sqrt((np.mean(c**4) - np.mean(c**2) ** 2) / N)
    assert abs(z.var() - spec.variance) < 4 * se_var


@pytest.mark.parametrize("tag", sorted(CATALOG))
def test_sampler_small_dt(tag):
    spec = CATALOG[tag]
    rng = np.random.default_rng(5)
    small = spec.sample(1e-4, rng, size=200_000)
    assert np.mean(small < 1e-2) > 0.95
    assert abs(small.mean() / 1e-4 - spec.mean) < 4 * small.std() / 1e-4 / math.sqrt(small.size)


def test_sample_increment_validates():
    with pytest.raises(DomainError):
        levy.sample_increment(levy.GammaBDLP(1, 1), 0.0, np.random.default_rng(0))
