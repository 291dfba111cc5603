"""Catalog of subordinator laws.

Six laws are supported: the Gamma, inverse Gaussian (IG) and positive
tempered stable (PTS) stationary laws of the OU variance process, and the
Lévy laws of their background driving processes (BDLP).  For each law the
catalog provides the Lévy density, its integrated tail, the Laplace
exponent with exact derivatives, the cumulant transform and an exact
increment sampler.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from typing import Callable, ClassVar

import numpy as np

from . import specfun
from ._validation import check_finite, check_open_unit, check_positive
from .exceptions import DivergentCumulant, DomainError, ParseError

__all__ = [
    "SubordinatorSpec",
    "GammaStationary",
    "GammaBDLP",
    "IGStationary",
    "IGBDLP",
    "PTSStationary",
    "PTSBDLP",
    "ModelParams",
    "LaplaceExponent",
    "parse_spec",
    "parse_model",
    "levy_density",
    "bdlp_from_stationary",
    "integrated_tail",
    "laplace_exponent",
    "cumulant_kappa",
    "sample_increment",
    "stationary_counterpart",
    "bdlp_counterpart",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("Lévy density and tail are defined for x > 0 only")
    return arr


def _ret(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class SubordinatorSpec:
    """Base class of the catalog laws."""

    tag: ClassVar[str] = ""
    keys: ClassVar[tuple[str, ...]] = ()
    stationary: ClassVar[bool] = True

    @property
    def tilt(self):
        """Exponential tilt ``c``: the exponent is analytic for ``Re(s) > -c``."""
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def density_derivative(self, x):
        raise NotImplementedError

    def tail(self, t):
        raise NotImplementedError

    def psi(self, s):
        raise NotImplementedError

    def psi_derivative(self, s, order=1):
        raise NotImplementedError

    def sample(self, dt, rng, size=None):
        raise NotImplementedError

    @property
    def mean(self):
        """``E[Z_1] = psi'(0)``."""
        return float(self.psi_derivative(0.0, 1))

    @property
    def variance(self):
        """``Var[Z_1] = -psi''(0)``."""
        return float(-self.psi_derivative(0.0, 2))

    def to_string(self):
        params = ",".join(f"{k}={getattr(self, _FIELD[k]):.17g}" for k in self.keys)
        return f"{self.tag}:{params}"

    def __str__(self):
        return self.to_string()


_FIELD = {"nu": "nu", "alpha": "alpha", "delta": "delta", "gamma": "gamma", "beta": "beta", "k": "k"}


def _compound_poisson(rate, dt, jump_sampler, rng, size):
    counts = rng.poisson(rate * dt, size=size)
    return jump_sampler(counts)


# ---------------------------------------------------------------------------
# Gamma family

@dataclass(frozen=True)
class GammaStationary(SubordinatorSpec):
    """Gamma subordinator, Lévy density ``nu exp(-alpha x) / x``."""

    nu: float
    alpha: float
    tag: ClassVar[str] = "gamma-stat"
    keys: ClassVar[tuple[str, ...]] = ("nu", "alpha")

    def __post_init__(self):
        object.__setattr__(self, "nu", check_positive(self.nu, "nu"))
        object.__setattr__(self, "alpha", check_positive(self.alpha, "alpha"))

    @property
    def tilt(self):
        return self.alpha

    def density(self, x):
        x = _as_array(x)
        return _ret(self.nu * np.exp(-self.alpha * x) / x)

    def density_derivative(self, x):
        x = _as_array(x)
        return _ret(-self.nu * np.exp(-self.alpha * x) * (1.0 / x**2 + self.alpha / x))

    def tail(self, t):
        t = _as_array(t)
        return _ret(self.nu * specfun.gamma_upper(0.0, self.alpha * t))

    def psi(self, s):
        return self.nu * np.log1p(np.asarray(s) / self.alpha)

    def psi_derivative(self, s, order=1):
        s = np.asarray(s)
        if order == 1:
            return self.nu / (self.alpha + s)
        if order == 2:
            return -self.nu / (self.alpha + s) ** 2
        raise DomainError("only first and second derivatives are tabulated")

    def sample(self, dt, rng, size=None):
        return rng.gamma(self.nu * dt, 1.0 / self.alpha, size=size)


@dataclass(frozen=True)
class GammaBDLP(SubordinatorSpec):
    """Compound Poisson BDLP of the Gamma law, Lévy density ``nu alpha exp(-alpha x)``."""

    nu: float
    alpha: float
    tag: ClassVar[str] = "gamma-bdlp"
    keys: ClassVar[tuple[str, ...]] = ("nu", "alpha")
    stationary: ClassVar[bool] = False

    def __post_init__(self):
        object.__setattr__(self, "nu", check_positive(self.nu, "nu"))
        object.__setattr__(self, "alpha", check_positive(self.alpha, "alpha"))

    @property
    def tilt(self):
        return self.alpha

    @property
    def jump_rate(self):
        return self.nu

    def density(self, x):
        x = _as_array(x)
        return _ret(self.nu * self.alpha * np.exp(-self.alpha * x))

    def density_derivative(self, x):
        x = _as_array(x)
        return _ret(-self.nu * self.alpha**2 * np.exp(-self.alpha * x))

    def tail(self, t):
        t = _as_array(t)
        return _ret(self.nu * np.exp(-self.alpha * t))

    def psi(self, s):
        s = np.asarray(s)
        return self.nu * s / (s + self.alpha)

    def psi_derivative(self, s, order=1):
        s = np.asarray(s)
        if order == 1:
            return self.nu * self.alpha / (s + self.alpha) ** 2
        if order == 2:
            return -2.0 * self.nu * self.alpha / (s + self.alpha) ** 3
        raise DomainError("only first and second derivatives are tabulated")

    def jump_sizes(self, counts, rng):
        counts = np.asarray(counts)
        return np.where(counts > 0, rng.gamma(np.maximum(counts, 1), 1.0 / self.alpha), 0.0)

    def sample(self, dt, rng, size=None):
        counts = rng.poisson(self.nu * dt, size=size)
        return _ret(self.jump_sizes(counts, rng))


# ---------------------------------------------------------------------------
# inverse Gaussian family

@dataclass(frozen=True)
class IGStationary(SubordinatorSpec):
    """IG subordinator, Lévy density ``delta / sqrt(2 pi) x**-1.5 exp(-gamma**2 x / 2)``."""

    delta: float
    gamma: float
    tag: ClassVar[str] = "ig-stat"
    keys: ClassVar[tuple[str, ...]] = ("delta", "gamma")

    def __post_init__(self):
        object.__setattr__(self, "delta", check_positive(self.delta, "delta"))
        object.__setattr__(self, "gamma", check_positive(self.gamma, "gamma"))

    @property
    def tilt(self):
        return 0.5 * self.gamma**2

    def density(self, x):
        x = _as_array(x)
        return _ret(self.delta / _SQRT_2PI * x**-1.5 * np.exp(-0.5 * self.gamma**2 * x))

    def density_derivative(self, x):
        x = _as_array(x)
        u = self.delta / _SQRT_2PI * x**-1.5 * np.exp(-0.5 * self.gamma**2 * x)
        return _ret(u * (-1.5 / x - 0.5 * self.gamma**2))

    def tail(self, t):
        t = _as_array(t)
        c = self.tilt
        return _ret(self.delta / _SQRT_2PI * math.sqrt(c) * specfun.gamma_upper(-0.5, c * t))

    def psi(self, s):
        s = np.asarray(s)
        return self.delta * (np.sqrt(self.gamma**2 + 2.0 * s) - self.gamma)

    def psi_derivative(self, s, order=1):
        root = np.sqrt(self.gamma**2 + 2.0 * np.asarray(s))
        if order == 1:
            return self.delta / root
        if order == 2:
            return -self.delta / root**3
        raise DomainError("only first and second derivatives are tabulated")

    def sample(self, dt, rng, size=None):
        shape = self.delta * dt
        return rng.wald(shape / self.gamma, shape**2, size=size)


@dataclass(frozen=True)
class IGBDLP(SubordinatorSpec):
    """BDLP of the IG law.

    Its Lévy density ``delta / (2 sqrt(2 pi)) x**-1.5 (1 + gamma**2 x)
    exp(-gamma**2 x / 2)`` splits into an IG(delta/2, gamma) part and a
    compound Poisson part with rate ``delta gamma / 2`` and
    Gamma(1/2, rate gamma**2/2) jumps.
    """

    delta: float
    gamma: float
    tag: ClassVar[str] = "ig-bdlp"
    keys: ClassVar[tuple[str, ...]] = ("delta", "gamma")
    stationary: ClassVar[bool] = False

    def __post_init__(self):
        object.__setattr__(self, "delta", check_positive(self.delta, "delta"))
        object.__setattr__(self, "gamma", check_positive(self.gamma, "gamma"))

    @property
    def tilt(self):
        return 0.5 * self.gamma**2

    @property
    def jump_rate(self):
        """Rate of the compound Poisson component."""
        return 0.5 * self.delta * self.gamma

    def density(self, x):
        x = _as_array(x)
        g2 = self.gamma**2
        return _ret(self.delta / (2.0 * _SQRT_2PI) * x**-1.5 * (1.0 + g2 * x) * np.exp(-0.5 * g2 * x))

    def density_derivative(self, x):
        x = _as_array(x)
        g2 = self.gamma**2
        base = self.delta / (2.0 * _SQRT_2PI) * np.exp(-0.5 * g2 * x)
        # d/dx [x^-1.5 + g2 x^-0.5] e^{-g2 x / 2}
        poly = -1.5 * x**-2.5 - 0.5 * g2 * x**-1.5 - 0.5 * g2 * (x**-1.5 + g2 * x**-0.5)
        return _ret(base * poly)

    def tail(self, t):
        t = _as_array(t)
        dg = self.delta * self.gamma
        c = self.tilt
        erfc_part = specfun.erfc(self.gamma * np.sqrt(t / 2.0))
        return _ret(0.5 * dg * erfc_part + dg * specfun.gamma_upper(-0.5, c * t) / (4.0 * math.sqrt(math.pi)))

    def psi(self, s):
        root = np.sqrt(self.gamma**2 + 2.0 * np.asarray(s))
        return 0.5 * self.delta * (root - self.gamma) + 0.5 * self.delta * self.gamma * (1.0 - self.gamma / root)

    def psi_derivative(self, s, order=1):
        root = np.sqrt(self.gamma**2 + 2.0 * np.asarray(s))
        g2 = self.gamma**2
        if order == 1:
            return 0.5 * self.delta / root + 0.5 * self.delta * g2 / root**3
        if order == 2:
            return -0.5 * self.delta / root**3 - 1.5 * self.delta * g2 / root**5
        raise DomainError("only first and second derivatives are tabulated")

    def continuous_part(self):
        """The infinite-activity IG(delta/2, gamma) component."""
        return IGStationary(0.5 * self.delta, self.gamma)

    def jump_sizes(self, counts, rng):
        counts = np.asarray(counts)
        return np.where(counts > 0, rng.gamma(np.maximum(0.5 * counts, 0.5), 2.0 / self.gamma**2), 0.0)

    def sample(self, dt, rng, size=None):
        base = self.continuous_part().sample(dt, rng, size=size)
        counts = rng.poisson(self.jump_rate * dt, size=size)
        return _ret(base + self.jump_sizes(counts, rng))


# ---------------------------------------------------------------------------
# positive tempered stable family

def _positive_stable(gamma, size, rng):
    """Kanter's representation: ``E exp(-s S) = exp(-s**gamma)``."""
    u = rng.uniform(0.0, math.pi, size=size)
    e = rng.standard_exponential(size=size)
    return (np.sin(gamma * u) / np.sin(u) ** (1.0 / gamma)) * (np.sin((1.0 - gamma) * u) / e) ** (
        (1.0 - gamma) / gamma
    )


def _tempered_stable(scale, gamma, lam, dt, rng, size):
    """Exact draw with Lévy density ``scale x**(-gamma-1) exp(-lam x)`` over ``dt``.

    A positive stable variable with ``E exp(-s S) = exp(-c s**gamma)`` and
    ``c = -scale Gamma(-gamma) dt`` is accepted with probability
    ``exp(-lam S)``.  The interval is split into ``m = ceil(c lam**gamma)``
    pieces so that each piece is accepted with probability at least
    ``exp(-1)``; the expected number of proposals per piece is therefore at
    most ``e``.
    """
    c_total = -scale * math.gamma(-gamma) * dt
    pieces = max(1, math.ceil(c_total * lam**gamma))
    c = c_total / pieces
    shape = () if size is None else size
    n = int(np.prod(shape)) if shape != () else 1
    total = np.zeros(n)
    for _ in range(pieces):
        out = np.empty(n)
        pending = np.arange(n)
        while pending.size:
            draw = c ** (1.0 / gamma) * _positive_stable(gamma, pending.size, rng)
            accept = rng.uniform(size=pending.size) <= np.exp(-lam * draw)
            out[pending[accept]] = draw[accept]
            pending = pending[~accept]
        total += out
    return total.reshape(shape) if shape != () else float(total[0])


@dataclass(frozen=True)
class PTSStationary(SubordinatorSpec):
    """PTS subordinator, Lévy density ``C x**(-gamma-1) exp(-k**2 x / 2)``.

    ``C = beta k**(-2 gamma) gamma / (Gamma(gamma) Gamma(1 - gamma))``.  The
    exponential tilt ``k > 0`` is required for every operation; ``k = 0`` is
    accepted at construction only.
    """

    beta: float
    gamma: float
    k: float
    tag: ClassVar[str] = "pts-stat"
    keys: ClassVar[tuple[str, ...]] = ("beta", "gamma", "k")

    def __post_init__(self):
        object.__setattr__(self, "beta", check_positive(self.beta, "beta"))
        object.__setattr__(self, "gamma", check_open_unit(self.gamma, "gamma"))
        object.__setattr__(self, "k", check_positive(self.k, "k", strict=False))

    def _need_tilt(self):
        if self.k == 0.0:
            raise DomainError("PTS laws need k > 0: the normalisation beta k**(-2 gamma) diverges at k = 0")

    @property
    def tilt(self):
        return 0.5 * self.k**2

    @property
    def levy_constant(self):
        self._need_tilt()
        g = self.gamma
        return self.beta * self.k ** (-2.0 * g) * g / (math.gamma(g) * math.gamma(1.0 - g))

    @property
    def a(self):
        """``beta gamma / (2**gamma Gamma(gamma) Gamma(1 - gamma))``."""
        g = self.gamma
        return self.beta * g / (2.0**g * math.gamma(g) * math.gamma(1.0 - g))

    def density(self, x):
        x = _as_array(x)
        return _ret(self.levy_constant * x ** (-self.gamma - 1.0) * np.exp(-self.tilt * x))

    def density_derivative(self, x):
        x = _as_array(x)
        u = self.levy_constant * x ** (-self.gamma - 1.0) * np.exp(-self.tilt * x)
        return _ret(u * (-(self.gamma + 1.0) / x - self.tilt))

    def tail(self, t):
        self._need_tilt()
        t = _as_array(t)
        return _ret(self.a * specfun.gamma_upper(-self.gamma, self.tilt * t))

    def psi(self, s):
        self._need_tilt()
        u = 1.0 + np.asarray(s) / self.tilt
        return self.a * math.gamma(-self.gamma) * (1.0 - u**self.gamma)

    def psi_derivative(self, s, order=1):
        self._need_tilt()
        g = self.gamma
        c = 1.0 / self.tilt
        u = 1.0 + np.asarray(s) * c
        if order == 1:
            return -self.a * math.gamma(-g) * g * c * u ** (g - 1.0)
        if order == 2:
            return -self.a * math.gamma(-g) * g * (g - 1.0) * c**2 * u ** (g - 2.0)
        raise DomainError("only first and second derivatives are tabulated")

    def sample(self, dt, rng, size=None):
        return _tempered_stable(self.levy_constant, self.gamma, self.tilt, dt, rng, size)


@dataclass(frozen=True)
class PTSBDLP(SubordinatorSpec):
    """BDLP of the PTS law, Lévy density ``C x**(-gamma-1) exp(-k**2 x/2) (gamma + k**2 x / 2)``.

    The ``gamma C x**(-gamma-1)`` part is tempered stable; the
    ``(k**2/2) C x**-gamma`` part is compound Poisson with rate
    ``a Gamma(1 - gamma)`` and Gamma(1 - gamma, rate k**2/2) jumps.
    """

    beta: float
    gamma: float
    k: float
    tag: ClassVar[str] = "pts-bdlp"
    keys: ClassVar[tuple[str, ...]] = ("beta", "gamma", "k")
    stationary: ClassVar[bool] = False

    def __post_init__(self):
        object.__setattr__(self, "beta", check_positive(self.beta, "beta"))
        object.__setattr__(self, "gamma", check_open_unit(self.gamma, "gamma"))
        object.__setattr__(self, "k", check_positive(self.k, "k", strict=False))

    _need_tilt = PTSStationary._need_tilt
    tilt = PTSStationary.tilt
    levy_constant = PTSStationary.levy_constant
    a = PTSStationary.a

    @property
    def jump_rate(self):
        self._need_tilt()
        return self.a * math.gamma(1.0 - self.gamma)

    def density(self, x):
        x = _as_array(x)
        u = self.levy_constant * x ** (-self.gamma - 1.0) * np.exp(-self.tilt * x)
        return _ret(u * (self.gamma + self.tilt * x))

    def density_derivative(self, x):
        x = _as_array(x)
        g, lam = self.gamma, self.tilt
        u = self.levy_constant * x ** (-g - 1.0) * np.exp(-lam * x)
        du = u * (-(g + 1.0) / x - lam)
        return _ret(du * (g + lam * x) + u * lam)

    def tail(self, t):
        self._need_tilt()
        t = _as_array(t)
        y = self.tilt * t
        g = self.gamma
        return _ret(self.a * (g * specfun.gamma_upper(-g, y) + specfun.gamma_upper(1.0 - g, y)))

    def psi(self, s):
        self._need_tilt()
        g = self.gamma
        u = 1.0 + np.asarray(s) / self.tilt
        return self.a * (g * math.gamma(-g) * (1.0 - u**g) + math.gamma(1.0 - g) * (1.0 - u ** (g - 1.0)))

    def psi_derivative(self, s, order=1):
        self._need_tilt()
        g = self.gamma
        c = 1.0 / self.tilt
        u = 1.0 + np.asarray(s) * c
        gm, g1 = math.gamma(-g), math.gamma(1.0 - g)
        if order == 1:
            return self.a * c * (-g * g * gm * u ** (g - 1.0) - g1 * (g - 1.0) * u ** (g - 2.0))
        if order == 2:
            return self.a * c**2 * (
                -g * g * (g - 1.0) * gm * u ** (g - 2.0) - g1 * (g - 1.0) * (g - 2.0) * u ** (g - 3.0)
            )
        raise DomainError("only first and second derivatives are tabulated")

    def jump_sizes(self, counts, rng):
        counts = np.asarray(counts)
        shape = np.maximum(counts, 1) * (1.0 - self.gamma)
        return np.where(counts > 0, rng.gamma(shape, 1.0 / self.tilt), 0.0)

    def continuous_part(self):
        """Tempered-stable component, as a stationary PTS law with scaled ``beta``."""
        return PTSStationary(self.beta * self.gamma, self.gamma, self.k)

    def sample(self, dt, rng, size=None):
        self._need_tilt()
        base = _tempered_stable(self.gamma * self.levy_constant, self.gamma, self.tilt, dt, rng, size)
        counts = rng.poisson(self.jump_rate * dt, size=size)
        return _ret(base + self.jump_sizes(counts, rng))


_LAWS = {cls.tag: cls for cls in (GammaStationary, GammaBDLP, IGStationary, IGBDLP, PTSStationary, PTSBDLP)}
_PAIRS = {GammaStationary: GammaBDLP, IGStationary: IGBDLP, PTSStationary: PTSBDLP}


def bdlp_counterpart(spec):
    """The BDLP whose OU process has ``spec`` as stationary law."""
    cls = _PAIRS.get(type(spec))
    if cls is None:
        raise DomainError(f"{spec.tag} is not a stationary law")
    return cls(*(getattr(spec, f.name) for f in fields(spec)))


def stationary_counterpart(spec):
    """The stationary law of the OU process driven by the BDLP ``spec``."""
    for stat, bdlp in _PAIRS.items():
        if isinstance(spec, bdlp):
            return stat(*(getattr(spec, f.name) for f in fields(spec)))
    raise DomainError(f"{spec.tag} is not a BDLP")


# ---------------------------------------------------------------------------
# spec strings

def _parse_pairs(text, what):
    out = {}
    if not text.strip():
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ParseError(f"{what}: expected key=value, got {item.strip()!r}")
        key, value = (p.strip() for p in item.split("=", 1))
        if key in out:
            raise ParseError(f"{what}: duplicate key {key!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise ParseError(f"{what}: key {key!r} has non-numeric value {value!r}") from None
    return out


def parse_spec(text):
    """Parse ``"<law>:key=value,..."`` into a :class:`SubordinatorSpec`.

    Laws: ``gamma-stat``, ``gamma-bdlp`` (keys ``nu, alpha``), ``ig-stat``,
    ``ig-bdlp`` (``delta, gamma``), ``pts-stat``, ``pts-bdlp`` (``beta,
    gamma, k``).  Errors name the offending key.
    """
    if isinstance(text, SubordinatorSpec):
        return text
    tag, sep, rest = str(text).partition(":")
    tag = tag.strip()
    cls = _LAWS.get(tag)
    if cls is None:
        raise ParseError(f"unknown subordinator law {tag!r}; expected one of {sorted(_LAWS)}")
    params = _parse_pairs(rest, tag)
    for key in params:
        if key not in cls.keys:
            raise ParseError(f"{tag}: unknown key {key!r}; expected {list(cls.keys)}")
    for key in cls.keys:
        if key not in params:
            raise ParseError(f"{tag}: missing key {key!r}")
    try:
        return cls(**{_FIELD[k]: params[k] for k in cls.keys})
    except DomainError as exc:
        raise ParseError(f"{tag}: {exc}") from None


# ---------------------------------------------------------------------------
# model parameters

@dataclass(frozen=True)
class ModelParams:
    """Parameters of ``dX = mu dt + sigma dW + rho dZ_{lambda t}``.

    ``rho`` is normally negative (leverage); other signs are accepted with a
    warning.
    """

    mu: float = 0.0
    sigma: float = 1.0
    rho: float = -1.0
    lam: float = 1.0
    r: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mu", check_finite(self.mu, "mu"))
        object.__setattr__(self, "sigma", check_positive(self.sigma, "sigma", strict=False))
        object.__setattr__(self, "rho", check_finite(self.rho, "rho"))
        object.__setattr__(self, "lam", check_positive(self.lam, "lambda"))
        object.__setattr__(self, "r", check_finite(self.r, "r"))
        if self.rho > 0:
            warnings.warn("rho > 0 removes the leverage effect", stacklevel=3)

    @classmethod
    def risk_neutral(cls, spec, *, sigma, rho, lam, r=0.0):
        """Set ``mu = r - lam kappa(rho) - sigma**2 / 2``."""
        mu = r - lam * cumulant_kappa(spec, rho) - 0.5 * sigma**2
        return cls(mu=mu, sigma=sigma, rho=rho, lam=lam, r=r)


_MODEL_KEYS = {"mu": "mu", "sigma": "sigma", "rho": "rho", "lambda": "lam", "lam": "lam", "r": "r"}


def parse_model(text):
    """Parse ``"mu=..,sigma=..,rho=..,lambda=..,r=.."`` (missing keys take defaults)."""
    params = _parse_pairs(str(text), "model")
    kwargs = {}
    for key, value in params.items():
        if key not in _MODEL_KEYS:
            raise ParseError(f"model: unknown key {key!r}; expected {sorted(set(_MODEL_KEYS) - {'lam'})}")
        kwargs[_MODEL_KEYS[key]] = value
    try:
        return ModelParams(**kwargs)
    except DomainError as exc:
        raise ParseError(f"model: {exc}") from None


# ---------------------------------------------------------------------------
# catalog operations

@dataclass(frozen=True)
class LaplaceExponent:
    """``psi`` with ``E exp(-s Z_t) = exp(-t psi(s))``, analytic for ``Re(s) > -tilt``."""

    spec: SubordinatorSpec
    evaluator: Callable
    tilt: float

    @property
    def abscissa(self):
        return -self.tilt

    def __call__(self, s):
        return self.evaluator(s)

    def derivative(self, s, order=1):
        return self.spec.psi_derivative(s, order)


def levy_density(spec, x):
    """Lévy density of ``spec`` at ``x > 0``."""
    return spec.density(x)


def bdlp_from_stationary(u, du):
    """BDLP Lévy density ``w(x) = -u(x) - x u'(x)`` from a stationary density and its derivative."""

    def w(x):
        x = np.asarray(x, dtype=float)
        return -u(x) - x * du(x)

    return w


def integrated_tail(spec, t):
    """``pi(t, inf)``, the Lévy measure of ``(t, inf)``, for ``t > 0``."""
    return spec.tail(t)


def laplace_exponent(spec):
    if isinstance(spec, (PTSStationary, PTSBDLP)):
        spec._need_tilt()
    return LaplaceExponent(spec, spec.psi, spec.tilt)


def cumulant_kappa(spec, theta):
    """``kappa(theta) = int (exp(theta x) - 1) w(x) dx = -psi(-theta)``.

    Raises
    ------
    DivergentCumulant
        When ``theta`` reaches the exponential tilt of the law.
    """
    theta = check_finite(theta, "theta")
    if theta >= spec.tilt:
        raise DivergentCumulant(f"kappa({theta}) diverges: tilt of {spec.tag} is {spec.tilt}")
    return float(-np.real(spec.psi(-theta)))


def sample_increment(spec, dt, rng, size=None):
    """Exact draw(s) of ``Z_{t+dt} - Z_t``."""
    dt = check_positive(dt, "dt")
    return spec.sample(dt, rng, size=size)
