"""Daily price ingestion, rolling exit times and a heuristic Gamma fit.

Time is the trading-day index: observation ``k`` sits at time ``k`` and no
calendar conventions are applied.  Exit thresholds are in log-return
units and always supplied by the caller.
"""

from __future__ import annotations

import csv
import datetime as _dt
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import mc
from ._validation import check_positive, check_positive_int
from .exceptions import DegenerateMoments, DomainError, EmptySeries, ParseError
from .levy import GammaBDLP, ModelParams

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "RollingExits",
    "GammaMomentEstimator",
    "load_prices",
    "log_returns",
    "summary_statistics",
    "rolling_exit_times",
    "squared_increment_proxy",
    "estimate_gamma_params",
    "synthetic_prices",
    "fixture_prices",
    "write_prices",
]

logger = logging.getLogger(__name__)

MIN_OBSERVATIONS = 250


@dataclass(frozen=True)
class PriceSeries:
    """Daily closes on strictly increasing dates."""

    dates: tuple
    closes: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        if closes.ndim != 1 or len(closes) != len(self.dates):
            raise DomainError("dates and closes must be 1-d and of equal length")
        if len(closes) == 0:
            raise EmptySeries(f"price series {self.source_id!r} is empty")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise DomainError("closes must be finite and positive")
        dates = tuple(self.dates)
        for i in range(1, len(dates)):
            if dates[i] <= dates[i - 1]:
                raise DomainError(f"dates must increase strictly; entry {i} is {dates[i]}")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return len(self.closes)

    def scaled(self, factor):
        """Same dates with every close multiplied by ``factor``."""
        factor = check_positive(factor, "factor")
        return PriceSeries(self.dates, self.closes * factor, self.source_id)


@dataclass(frozen=True)
class ReturnSeries:
    """Log-return path anchored at ``window_start`` (``x[0] == 0``)."""

    x: np.ndarray
    window_start: int


@dataclass(frozen=True)
class RollingExits:
    """Exit times, in trading days, of every rolling window.

    ``starts`` lists the window start indices; ``times[i]`` is the exit
    time of window ``starts[i]`` or ``-1`` when that window is censored.
    """

    threshold: float
    mode: str
    stride: int
    starts: np.ndarray
    times: np.ndarray

    @property
    def exit_times(self):
        return self.times[self.times >= 0]

    @property
    def censored_count(self):
        return int(np.count_nonzero(self.times < 0))

    @property
    def window_count(self):
        return len(self.starts)

    def histogram(self):
        """Unit-width bins centred on the integer exit times.

        Returns ``(bin_left, bin_right, count)`` arrays; empty when every
        window is censored.
        """
        exits = self.exit_times
        if exits.size == 0:
            empty = np.array([], dtype=float)
            return empty, empty, np.array([], dtype=np.int64)
        top = int(exits.max())
        counts = np.bincount(exits.astype(np.int64), minlength=top + 1)[1:]
        left = np.arange(1, top + 1) - 0.5
        return left, left + 1.0, counts


# ---------------------------------------------------------------------------
# input

def _parse_date(text, line):
    try:
        return _dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"bad ISO-8601 date {text!r}", line) from None


def _parse_close(text, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"bad close {text!r}", line) from None
    if not math.isfinite(value) or value <= 0:
        raise ParseError(f"close must be a positive number, got {text!r}", line)
    return value


def load_prices(path, source_id=None):
    """Read a ``date,close`` CSV into a :class:`PriceSeries`.

    Line numbers in :class:`ParseError` count the header as line 1.

    Raises
    ------
    ParseError
        Missing header, malformed rows, duplicate or decreasing dates.
    EmptySeries
        Header without observations.
    """
    dates, closes = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptySeries(f"{path}: empty file")
        if [h.strip().lower() for h in header] != ["date", "close"]:
            raise ParseError(f"expected header 'date,close', got {','.join(header)!r}", 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line)
            date = _parse_date(row[0], line)
            if dates and date <= dates[-1]:
                kind = "duplicate" if date == dates[-1] else "out-of-order"
                raise ParseError(f"{kind} date {date.isoformat()}", line)
            dates.append(date)
            closes.append(_parse_close(row[1], line))
    if not dates:
        raise EmptySeries(f"{path}: no observations")
    return PriceSeries(tuple(dates), np.array(closes), str(source_id if source_id is not None else path))


def write_prices(series, path):
    """Write ``series`` as a ``date,close`` CSV with 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("date,close\n")
        for date, close in zip(series.dates, series.closes):
            fh.write(f"{date.isoformat()},{close:.17g}\n")


# ---------------------------------------------------------------------------
# returns and exits

def log_returns(series, window_start=0):
    """``X_k = log(close_{start + k} / close_start)`` for the rest of the series."""
    n = len(series)
    if isinstance(window_start, bool) or not 0 <= int(window_start) < n:
        raise DomainError(f"window_start must lie in [0, {n - 1}], got {window_start}")
    start = int(window_start)
    logs = np.log(series.closes)
    return ReturnSeries(logs[start:] - logs[start], start)


def summary_statistics(series):
    """Mean, median, maximum and minimum of the closes, plus the count."""
    closes = series.closes
    return {
        "count": int(len(closes)),
        "mean": float(np.mean(closes)),
        "median": float(np.median(closes)),
        "max": float(np.max(closes)),
        "min": float(np.min(closes)),
    }


def rolling_exit_times(series, threshold, mode="up", stride=1, *, horizon=None):
    """First exit of the anchored log-return path from every window start.

    Window ``s`` (``s = 0, stride, 2 stride, ...`` while a later observation
    exists) records the first ``k >= 1`` with ``X_k >= threshold`` (``up``)
    or ``X_k <= -threshold`` (``down``).  Windows without such ``k`` before
    the end of the series, or within ``horizon`` days when given, are
    censored.
    """
    threshold = check_positive(threshold, "threshold")
    stride = check_positive_int(stride, "stride")
    if mode not in ("up", "down"):
        raise DomainError(f"mode must be up or down, got {mode!r}")
    if horizon is not None:
        horizon = check_positive_int(horizon, "horizon")
    logs = np.log(series.closes)
    if mode == "down":
        logs = -logs
    n = len(logs)
    starts = np.arange(0, max(n - 1, 0), stride)
    times = np.full(len(starts), -1, dtype=np.int64)
    for i, s in enumerate(starts):
        stop = n if horizon is None else min(n, s + horizon + 1)
        seg = logs[s + 1 : stop] - logs[s]
        hit = np.flatnonzero(seg >= threshold)
        if hit.size:
            times[i] = int(hit[0]) + 1
    return RollingExits(threshold, mode, stride, starts, times)


# ---------------------------------------------------------------------------
# estimation

def squared_increment_proxy(series):
    """Squared daily log increments, a noisy proxy for the daily variance."""
    return np.diff(np.log(series.closes)) ** 2


def _autocorrelation(x, lags):
    x = np.asarray(x, dtype=float) - np.mean(x)
    denom = float(np.dot(x, x))
    if denom == 0.0:
        return [0.0 for _ in lags]
    return [float(np.dot(x[:-k], x[k:]) / denom) if k < len(x) else 0.0 for k in lags]


class GammaMomentEstimator(BaseEstimator):
    """Method-of-moments fit of a stationary Gamma(nu, alpha) variance law.

    Heuristic: the stationary law has mean ``nu / alpha`` and variance
    ``nu / alpha**2``, so a sample with mean ``m`` and variance ``v`` gives
    ``alpha = m / v`` and ``nu = m**2 / v``.  ``fit`` takes a price series
    (its squared increments serve as the variance sample) unless
    ``oracle=True``, in which case it takes the variance sample directly.
    ``lam`` does not enter the moments of the stationary law; it is
    carried along so the fitted BDLP comes with its OU rate.

    Attributes
    ----------
    nu_, alpha_ : float
        Fitted parameters.
    diagnostics_ : dict
        Sample size, moments, proxy autocorrelation at lags 1, 2, 5, 10
        and a note on proxy noise.
    """

    def __init__(self, lam=1.0, oracle=False, min_observations=MIN_OBSERVATIONS):
        self.lam = lam
        self.oracle = oracle
        self.min_observations = min_observations

    def fit(self, X, y=None):
        check_positive(self.lam, "lambda")
        if self.oracle:
            sample = np.asarray(X, dtype=float).ravel()
            observations = sample.size
        else:
            if not isinstance(X, PriceSeries):
                raise DomainError("fit expects a PriceSeries unless oracle=True")
            observations = len(X)
            sample = squared_increment_proxy(X)
        if observations < self.min_observations:
            raise DomainError(f"need at least {self.min_observations} observations, got {observations}")
        if not np.all(np.isfinite(sample)) or np.any(sample < 0):
            raise DomainError("variance sample must be finite and nonnegative")
        m = math.fsum(sample) / sample.size
        v = math.fsum((sample - m) ** 2) / (sample.size - 1)
        if not v > 0 or not m > 0:
            raise DegenerateMoments(f"sample mean {m!r} and variance {v!r} do not identify a Gamma law")
        self.alpha_ = m / v
        self.nu_ = m * m / v
        note = None
        if not self.oracle:
            note = "squared increments are a noisy variance proxy; treat the fit as heuristic"
            warnings.warn(note, stacklevel=2)
        self.diagnostics_ = {
            "observations": int(observations),
            "sample_mean": m,
            "sample_variance": v,
            "autocorrelation": dict(zip(("1", "2", "5", "10"), _autocorrelation(sample, (1, 2, 5, 10)))),
            "lambda": float(self.lam),
            "mode": "oracle" if self.oracle else "squared-increment proxy",
            "note": note,
        }
        return self

    def bdlp(self):
        """The Gamma BDLP paired with the fitted stationary law."""
        return GammaBDLP(self.nu_, self.alpha_)


def estimate_gamma_params(series, lam=1.0, *, oracle=False):
    """Return ``(nu, alpha, diagnostics)`` from :class:`GammaMomentEstimator`."""
    est = GammaMomentEstimator(lam=lam, oracle=oracle).fit(series)
    return est.nu_, est.alpha_, est.diagnostics_


# ---------------------------------------------------------------------------
# synthetic fixture

def synthetic_prices(n_days, seed, *, model=None, spec=None, s0=1000.0, start="2010-01-04"):
    """Daily closes ``s0 * exp(X_k)`` from a simulated log-return path.

    ``X`` follows ``mu t + sigma W_t + rho Z_{lambda t}`` with one unit of
    time per trading day.  Without ``spec`` the jump part is switched off
    and the path is a geometric Brownian motion.  Dates are consecutive
    business days from ``start``.
    """
    n_days = check_positive_int(n_days, "n_days")
    if n_days < 2:
        raise DomainError("need at least two days")
    if model is None:
        model = ModelParams(mu=0.0, sigma=0.01, rho=0.0, lam=1.0)
    if spec is None:
        # the jump part is drawn but carries zero weight
        spec = GammaBDLP(1.0, 1.0)
        model = ModelParams(mu=model.mu, sigma=model.sigma, rho=0.0, lam=model.lam, r=model.r)
    x = mc.simulate_logreturn(model, spec, n_days - 1, 1.0, (seed, 0)).values
    first = np.datetime64(start, "D")
    days = np.busday_offset(first, np.arange(n_days), roll="forward")
    dates = tuple(_dt.date.fromisoformat(str(d)) for d in days)
    return PriceSeries(dates, s0 * np.exp(x), f"synthetic:seed={int(seed)}")


FIXTURE_MODEL = ModelParams(mu=3e-4, sigma=0.008, rho=-0.004, lam=1.0)
FIXTURE_SPEC = GammaBDLP(0.5, 1.0)


def fixture_prices(n_days, seed):
    """Synthetic daily closes from a GBM with Gamma BDLP jumps (fixed parameters).

    Jumps arrive at rate 0.5 per day with mean log-size 0.4 percent, on top
    of 0.8 percent daily Brownian volatility.
    """
    return synthetic_prices(n_days, seed, model=FIXTURE_MODEL, spec=FIXTURE_SPEC)
