"""Monte Carlo oracle for exit times, log-return paths and the variance process.

Every path draws from its own counter-based stream: path ``i`` of a run
with seed ``s`` uses a Philox generator keyed by ``SeedSequence(s,
spawn_key=(i,))``.  Results therefore do not depend on how paths are
split across workers, and aggregation is always in path-index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import firstexit
from ._validation import check_finite, check_positive, check_positive_int
from .exceptions import DomainError
from .levy import GammaBDLP, ModelParams, SubordinatorSpec

__all__ = [
    "PathSample",
    "EmpiricalExitDistribution",
    "path_stream",
    "simulate_subordinator",
    "simulate_logreturn",
    "simulate_variance",
    "realized_variance",
    "empirical_exit",
    "brownian_exit_sample",
    "subordinator_exit_sample",
    "ks_distance",
    "decomposition_check",
]

# coarse Brownian steps are refined by exact bridges only within this many
# coarse standard deviations of the barrier
_BRIDGE_BAND = 6.0
_REFINE = 25


def path_stream(seed, index):
    """Generator of path ``index`` for run seed ``seed``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(seq))


def _stream_of(stream):
    if isinstance(stream, np.random.Generator):
        return stream, None
    seed, index = stream
    return path_stream(seed, index), (int(seed), int(index))


@dataclass(frozen=True)
class PathSample:
    """One simulated trajectory sampled at ``k * dt``."""

    dt: float
    values: np.ndarray
    stream_id: tuple | None = None

    @property
    def times(self):
        return self.dt * np.arange(len(self.values))


@dataclass(frozen=True)
class EmpiricalExitDistribution:
    """Sorted exit times plus the number of paths censored at ``horizon``.

    ``grid_step`` is set when the exit times are grid-valued (first grid
    time at or beyond the crossing); such samples are compared with a
    distribution function at grid nodes only.
    """

    level: float
    exit_times: np.ndarray
    censored_count: int
    horizon: float = math.inf
    grid_step: float | None = None

    def __post_init__(self):
        times = np.sort(np.asarray(self.exit_times, dtype=float))
        object.__setattr__(self, "exit_times", times)

    @property
    def path_count(self):
        return len(self.exit_times) + self.censored_count

    def cdf(self, x):
        """Empirical ``P(T <= x)`` with censored paths in the denominator."""
        x = np.asarray(x, dtype=float)
        return np.searchsorted(self.exit_times, x, side="right") / self.path_count


def _run_paths(worker, n_paths, threads):
    threads = max(1, int(threads))
    if threads == 1:
        return [worker(i) for i in range(n_paths)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(n_paths), chunksize=max(1, n_paths // (8 * threads))))


# ---------------------------------------------------------------------------
# path simulation

def simulate_subordinator(spec, horizon, dt, stream):
    """Subordinator path on ``[0, horizon]`` from exact increments."""
    horizon = check_positive(horizon, "horizon")
    dt = check_positive(dt, "dt")
    rng, stream_id = _stream_of(stream)
    steps = int(math.ceil(horizon / dt - 1e-9))
    increments = np.asarray(spec.sample(dt, rng, size=steps), dtype=float)
    values = np.concatenate([[0.0], np.cumsum(increments)])
    if np.any(np.diff(values) < 0):
        raise AssertionError("subordinator path decreased")
    return PathSample(dt, values, stream_id)


def simulate_logreturn(model, spec, horizon, dt, stream):
    """``X = mu t + sigma W_t + rho Z_{lambda t}`` on the grid ``k dt``.

    Brownian increments are Gaussian and subordinator increments over
    ``lambda dt`` are drawn exactly from the law of ``spec``.
    """
    horizon = check_positive(horizon, "horizon")
    dt = check_positive(dt, "dt")
    rng, stream_id = _stream_of(stream)
    steps = int(math.ceil(horizon / dt - 1e-9))
    normals = rng.standard_normal(steps)
    jumps = np.asarray(spec.sample(model.lam * dt, rng, size=steps), dtype=float)
    increments = model.mu * dt + model.sigma * math.sqrt(dt) * normals + model.rho * jumps
    return PathSample(dt, np.concatenate([[0.0], np.cumsum(increments)]), stream_id)


def simulate_variance(model, spec, sigma0_sq, horizon, dt, stream, *, midpoint_refine=1):
    """OU variance path ``d sigma^2 = -lambda sigma^2 dt + dZ_{lambda t}``.

    Each step applies the exact decay ``exp(-lambda dt)``.  Jumps of the
    compound Poisson Gamma BDLP are placed at their uniform epochs inside
    the step and discounted individually; increments of infinite-activity
    BDLPs are discounted from the step midpoint, over ``midpoint_refine``
    sub-steps per step.
    """
    sigma0_sq = check_positive(sigma0_sq, "sigma0_sq")
    horizon = check_positive(horizon, "horizon")
    dt = check_positive(dt, "dt")
    rng, stream_id = _stream_of(stream)
    lam = model.lam
    steps = int(math.ceil(horizon / dt - 1e-9))
    decay = math.exp(-lam * dt)
    values = np.empty(steps + 1)
    values[0] = sigma0_sq
    if isinstance(spec, GammaBDLP):
        counts = rng.poisson(spec.jump_rate * lam * dt, size=steps)
        total = int(counts.sum())
        epochs = rng.uniform(0.0, dt, size=total)
        sizes = rng.exponential(1.0 / spec.alpha, size=total)
        discounted = sizes * np.exp(-lam * (dt - epochs))
        owner = np.repeat(np.arange(steps), counts)
        added = np.bincount(owner, weights=discounted, minlength=steps)
    else:
        m = check_positive_int(midpoint_refine, "midpoint_refine")
        sub = dt / m
        raw = np.asarray(spec.sample(lam * sub, rng, size=(steps, m)), dtype=float).reshape(steps, m)
        # sub-step j ends (m - j - 1) sub-steps before the step end; discount from its midpoint
        weights = np.exp(-lam * sub * (np.arange(m)[::-1] + 0.5))
        added = raw @ weights
    # v_{k+1} = decay v_k + added_k
    values[1:], _ = lfilter([1.0], [1.0, -decay], added, zi=[decay * sigma0_sq])
    return PathSample(dt, values, stream_id)


def realized_variance(variance_path, model, spec, T):
    """``(1/T) int_0^T sigma_t^2 dt + rho^2 lambda Var[Z_1]``.

    The time average uses the trapezoid rule on the path; ``Var[Z_1]`` is
    the second derivative of the catalog exponent at zero.  As ``T -> 0``
    the average tends to ``sigma_0^2``.
    """
    T = check_positive(T, "T")
    dt = variance_path.dt
    n = int(round(T / dt))
    if n > len(variance_path.values) - 1 or not math.isclose(n * dt, T, rel_tol=1e-9, abs_tol=1e-12):
        if T < dt:
            average = float(variance_path.values[0])
            return average + model.rho**2 * model.lam * spec.variance
        raise DomainError(f"path covers {dt * (len(variance_path.values) - 1)}, not a multiple grid of T={T}")
    segment = variance_path.values[: n + 1]
    average = float(np.trapezoid(segment, dx=dt) / T)
    return average + model.rho**2 * model.lam * spec.variance


# ---------------------------------------------------------------------------
# exit times

def _first_crossing(values, level, mode):
    if mode == "up":
        hits = np.flatnonzero(values >= level)
    else:
        hits = np.flatnonzero(values <= -level)
    return int(hits[0]) if hits.size else None


def empirical_exit(paths, level, mode="up", *, interpolate=True):
    """Exit times of sampled paths.

    ``up`` records the first time with value ``>= level``; ``down`` the
    first with value ``<= -level``.  With ``interpolate`` the crossing is
    located by linear interpolation between grid values (continuous
    components); otherwise the first grid time at or past the crossing is
    used, which is exact at grid nodes for subordinator paths.
    """
    level = check_finite(level, "level")
    if mode not in ("up", "down"):
        raise DomainError(f"mode must be up or down, got {mode!r}")
    if isinstance(paths, PathSample):
        paths = [paths]
    times = []
    censored = 0
    horizon = 0.0
    dt = None
    for path in paths:
        values = np.asarray(path.values, dtype=float)
        dt = path.dt
        horizon = max(horizon, dt * (len(values) - 1))
        k = _first_crossing(values, level, mode)
        if k is None:
            censored += 1
            continue
        if k == 0 or not interpolate:
            times.append(k * dt)
            continue
        target = level if mode == "up" else -level
        prev, cur = values[k - 1], values[k]
        frac = (target - prev) / (cur - prev) if cur != prev else 1.0
        times.append((k - 1 + frac) * dt)
    return EmpiricalExitDistribution(level, np.array(times), censored, horizon, None if interpolate else dt)


def _brownian_exit_one(rng, a, mu, sigma, dt, horizon):
    """Exit time below ``-a`` of ``mu t + sigma W_t`` monitored on the grid ``k dt``.

    The path is drawn on a grid ``_REFINE`` times coarser; a coarse step
    whose endpoints both lie more than ``_BRIDGE_BAND`` coarse standard
    deviations above the barrier is skipped (the fine-grid path crosses
    inside it with probability below ``exp(-2 * 36)``), and every other
    coarse step is refined by an exact Brownian bridge on the fine grid.
    The result has the law of the fine-grid monitored exit time.
    """
    coarse = dt * _REFINE
    sd_c = sigma * math.sqrt(coarse)
    band = -a + _BRIDGE_BAND * sd_c
    fine_sd = sigma * math.sqrt(dt)
    ramp = np.arange(1, _REFINE + 1) / _REFINE
    position, elapsed = 0.0, 0.0
    block = 64
    max_steps = int(math.ceil(horizon / coarse))
    taken = 0
    while taken < max_steps:
        n = min(block, max_steps - taken)
        increments = mu * coarse + sd_c * rng.standard_normal(n)
        ends = position + np.cumsum(increments)
        starts = np.concatenate([[position], ends[:-1]])
        flagged = np.flatnonzero(np.minimum(starts, ends) < band)
        if flagged.size:
            z = rng.standard_normal((flagged.size, _REFINE)) * fine_sd
            walk = np.cumsum(z, axis=1)
            drift = mu * dt * np.arange(1, _REFINE + 1)
            total = (ends - starts)[flagged][:, None]
            bridge = starts[flagged][:, None] + drift + walk - ramp * (walk[:, -1:] + drift[-1] - total)
            below = bridge <= -a
            rows = np.flatnonzero(below.any(axis=1))
            if rows.size:
                r = rows[0]
                j = int(np.argmax(below[r]))
                prev = starts[flagged[r]] if j == 0 else bridge[r, j - 1]
                cur = bridge[r, j]
                frac = (-a - prev) / (cur - prev) if cur != prev else 1.0
                t = elapsed + flagged[r] * coarse + (j + frac) * dt
                return t if t <= horizon else None
        position = float(ends[-1])
        elapsed += n * coarse
        taken += n
        block = min(2 * block, 4096)
    return None


def brownian_exit_sample(a, mu, sigma, n_paths, seed, *, dt=1e-4, horizon=None, threads=1):
    """Exit times of ``mu t + sigma W_t`` below ``-a`` for ``n_paths`` paths.

    Crossings are located by linear interpolation on the ``dt`` grid
    without bridge correction of the monitoring bias.  The default horizon
    is ``50 a / |mu|``, or ``50 a**2 / sigma**2`` without drift.
    """
    a = check_positive(a, "a")
    sigma = check_positive(sigma, "sigma")
    mu = check_finite(mu, "mu")
    n_paths = check_positive_int(n_paths, "n_paths")
    if horizon is None:
        horizon = 50.0 * a / abs(mu) if mu < 0 else 50.0 * a * a / sigma**2

    def worker(i):
        return _brownian_exit_one(path_stream(seed, i), a, mu, sigma, dt, horizon)

    results = _run_paths(worker, n_paths, threads)
    times = np.array([r for r in results if r is not None])
    return EmpiricalExitDistribution(a, times, n_paths - len(times), horizon)


def _exact_jump_exit(rng, spec, level, horizon):
    """Exit time of a compound Poisson subordinator from its jump epochs."""
    rate = spec.jump_rate
    position, clock = 0.0, 0.0
    block = 16
    while True:
        gaps = rng.exponential(1.0 / rate, size=block)
        sizes = rng.exponential(1.0 / spec.alpha, size=block)
        epochs = clock + np.cumsum(gaps)
        levels = position + np.cumsum(sizes)
        hit = np.flatnonzero(levels >= level)
        if hit.size:
            t = float(epochs[hit[0]])
            return t if t <= horizon else None
        if epochs[-1] > horizon:
            return None
        position, clock = float(levels[-1]), float(epochs[-1])
        block = min(2 * block, 1024)


def _grid_exit(rng, spec, level, dt, horizon):
    position = 0.0
    taken = 0
    max_steps = int(math.ceil(horizon / dt - 1e-9))
    block = 64
    while taken < max_steps:
        n = min(block, max_steps - taken)
        levels = position + np.cumsum(np.asarray(spec.sample(dt, rng, size=n), dtype=float))
        hit = np.flatnonzero(levels >= level)
        if hit.size:
            return (taken + int(hit[0]) + 1) * dt
        position = float(levels[-1])
        taken += n
        block = min(2 * block, 4096)
    return None


def subordinator_exit_sample(spec, level, n_paths, seed, *, dt=0.01, horizon=None, threads=1):
    """Exit times ``inf{x : Z_x >= level}`` for ``n_paths`` independent paths.

    Compound Poisson laws (Gamma BDLP) are simulated from exact jump epochs
    and return continuous exit times.  Other laws are stepped with exact
    increments over ``dt``; the recorded time is the first grid time with
    ``Z >= level``, so ``P(T <= k dt)`` is unbiased at every grid node.
    The default horizon is ``50 level / E[Z_1]``.
    """
    if not isinstance(spec, SubordinatorSpec):
        raise DomainError(f"need a catalog subordinator, got {spec!r}")
    level = check_positive(level, "level")
    n_paths = check_positive_int(n_paths, "n_paths")
    dt = check_positive(dt, "dt")
    if horizon is None:
        horizon = 50.0 * level / spec.mean
    exact = isinstance(spec, GammaBDLP)

    def worker(i):
        rng = path_stream(seed, i)
        if exact:
            return _exact_jump_exit(rng, spec, level, horizon)
        return _grid_exit(rng, spec, level, dt, horizon)

    results = _run_paths(worker, n_paths, threads)
    times = np.array([r for r in results if r is not None])
    return EmpiricalExitDistribution(level, times, n_paths - len(times), horizon, None if exact else dt)


def ks_distance(sample, cdf):
    """Kolmogorov-Smirnov distance between an empirical exit law and ``cdf``.

    For continuous samples the supremum is taken over the sample points
    (both one-sided gaps); for grid-valued samples over the grid nodes up
    to the horizon.  Censored paths count in the denominator only.
    """
    n = sample.path_count
    if sample.grid_step is not None:
        nodes = sample.grid_step * np.arange(1, int(round(sample.horizon / sample.grid_step)) + 1)
        nodes = nodes[nodes <= sample.horizon + 1e-12]
        return float(np.max(np.abs(sample.cdf(nodes) - cdf(nodes))))
    x = sample.exit_times
    if x.size == 0:
        return float(np.max(np.abs(cdf(np.array([sample.horizon])))))
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, x.size + 1)
    upper = np.max(i / n - f)
    lower = np.max(f - (i - 1) / n)
    return float(max(upper, lower))


# ---------------------------------------------------------------------------
# coupled decomposition report

@dataclass
class DecompositionReport:
    """Coupled-noise comparison of the combined exit time with the sum of the part exits.

    This is an observable proxy for the decomposition identity, not an
    evaluation of its probability.
    """

    paths: int
    dt: float
    horizon: float
    combined_censored: int
    brownian_censored: int
    subordinator_censored: int
    differences: np.ndarray = field(repr=False)
    fraction_within_dt: float
    brownian_ks: float | None

    def summary(self):
        diffs = self.differences
        return {
            "paths": self.paths,
            "dt": self.dt,
            "horizon": self.horizon,
            "censored": {
                "combined": self.combined_censored,
                "brownian": self.brownian_censored,
                "subordinator": self.subordinator_censored,
            },
            "difference_count": int(diffs.size),
            "difference_mean": float(diffs.mean()) if diffs.size else None,
            "difference_quantiles": [float(q) for q in np.quantile(diffs, [0.05, 0.5, 0.95])] if diffs.size else None,
            "fraction_within_dt": self.fraction_within_dt,
            "brownian_ks": self.brownian_ks,
        }


def _down_exit(values, level, dt):
    k = _first_crossing(values, level, "down")
    if k is None:
        return None
    if k == 0:
        return 0.0
    prev, cur = values[k - 1], values[k]
    frac = (-level - prev) / (cur - prev) if cur != prev else 1.0
    return (k - 1 + frac) * dt


def decomposition_check(query, paths_budget, seed, *, dt=1e-3, horizon=None, threads=1):
    """Simulate the combined and part exit times on common noise.

    For each path the drifted Brownian part ``mu t + sigma W_t``, the jump
    part ``mu t + rho Z_t`` and their sum (drift counted once) are
    monitored for the first passage below ``-a``, ``-b`` and ``-(a + b)``.
    The subordinator runs on its own clock (no ``lambda`` time change).
    """
    model = query.model
    if model.rho >= 0:
        raise DomainError("the decomposition check needs rho < 0")
    a, b = query.a, query.b
    n_paths = check_positive_int(paths_budget, "paths_budget")
    dt = check_positive(dt, "dt")
    if horizon is None:
        speed = abs(model.mu) + abs(model.rho) * query.spec.mean
        horizon = 50.0 * (a + b) / speed if speed > 0 else 50.0 * (a + b) ** 2 / max(model.sigma, 1e-12) ** 2
    steps = int(math.ceil(horizon / dt - 1e-9))
    spec = query.spec

    def worker(i):
        rng = path_stream(seed, i)
        normals = rng.standard_normal(steps)
        jumps = np.asarray(spec.sample(dt, rng, size=steps), dtype=float)
        drift = model.mu * dt * np.arange(1, steps + 1)
        brown = np.concatenate([[0.0], drift + model.sigma * math.sqrt(dt) * np.cumsum(normals)])
        sub = np.concatenate([[0.0], drift + model.rho * np.cumsum(jumps)])
        combined = np.concatenate([[0.0], brown[1:] + sub[1:] - drift])
        return _down_exit(combined, a + b, dt), _down_exit(brown, a, dt), _down_exit(sub, b, dt)

    results = _run_paths(worker, n_paths, threads)
    A = [r[0] for r in results]
    B = [r[1] for r in results]
    C = [r[2] for r in results]
    diffs = np.array([x - (y + z) for x, y, z in zip(A, B, C) if None not in (x, y, z)])
    within = float(np.mean(np.abs(diffs) < dt)) if diffs.size else 0.0
    brownian_times = np.array([y for y in B if y is not None])
    ks = None
    if model.sigma > 0 and model.mu <= 0 and brownian_times.size:
        sample = EmpiricalExitDistribution(a, brownian_times, n_paths - brownian_times.size, horizon)
        ks = ks_distance(sample, lambda x: firstexit.brownian_exit_cdf(a, model.mu, model.sigma, x))
    return DecompositionReport(
        paths=n_paths,
        dt=dt,
        horizon=horizon,
        combined_censored=sum(x is None for x in A),
        brownian_censored=sum(y is None for y in B),
        subordinator_censored=sum(z is None for z in C),
        differences=diffs,
        fraction_within_dt=within,
        brownian_ks=ks,
    )
