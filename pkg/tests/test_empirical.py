from __future__ import annotations

import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special
from sklearn.base import clone

from exitlab import emit, empirical, firstexit, levy, mc
from exitlab.exceptions import DegenerateMoments, DomainError, EmptySeries, ParseError


def _series(closes, start=dt.date(2020, 1, 1)):
    dates = tuple(start + dt.timedelta(days=i) for i in range(len(closes)))
    return empirical.PriceSeries(dates, np.asarray(closes, dtype=float), "test")


# --- loading ----------------------------------------------------------------

def test_two_row_fixture(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("date,close\n2020-01-01,100\n2020-01-02,101\n")
    series = empirical.load_prices(path)
    assert len(series) == 2
    assert series.closes.tolist() == [100.0, 101.0]
    assert series.dates[1] == dt.date(2020, 1, 2)


def test_out_of_order_dates_name_line(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("date,close\n2020-01-01,100\n2020-01-03,101\n2020-01-02,99\n2019-01-01,98\n")
    with pytest.raises(ParseError) as info:
        empirical.load_prices(path)
    assert info.value.line == 4


def test_duplicate_date_rejected(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("date,close\n2020-01-01,100\n2020-01-01,101\n")
    with pytest.raises(ParseError) as info:
        empirical.load_prices(path)
    assert info.value.line == 3


@pytest.mark.parametrize(
    "body, line",
    [("date,close\n2020-13-01,100\n", 2), ("date,close\n2020-01-01,abc\n", 2), ("date,close\n2020-01-01,-5\n", 2),
     ("day,price\n2020-01-01,1\n", 1), ("date,close\n2020-01-01,1,2\n", 2)],
)
def test_malformed_rows(tmp_path, body, line):
    path = tmp_path / "p.csv"
    path.write_text(body)
    with pytest.raises(ParseError) as info:
        empirical.load_prices(path)
    assert info.value.line == line


def test_empty_series(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("date,close\n")
    with pytest.raises(EmptySeries):
        empirical.load_prices(path)
    (tmp_path / "q.csv").write_text("")
    with pytest.raises(EmptySeries):
        empirical.load_prices(tmp_path / "q.csv")


def test_write_load_round_trip(tmp_path):
    series = empirical.fixture_prices(300, 4)
    empirical.write_prices(series, tmp_path / "p.csv")
    back = empirical.load_prices(tmp_path / "p.csv")
    assert back.dates == series.dates
    assert np.array_equal(back.closes, series.closes)


# --- returns and statistics ----------------------------------------------------

def test_log_returns_constant_prices():
    assert np.all(empirical.log_returns(_series([5.0] * 10)).x == 0.0)


def test_log_returns_unit():
    x = empirical.log_returns(_series([100.0, 100.0 * math.e])).x
    assert x[0] == 0.0
    assert x[1] == pytest.approx(1.0, abs=1e-15)


def test_log_returns_window_start_matches_direct_logs():
    series = empirical.fixture_prices(500, 8)
    ret = empirical.log_returns(series, 37)
    direct = [math.log(c / series.closes[37]) for c in series.closes[37:]]
    assert ret.window_start == 37
    assert np.max(np.abs(ret.x - direct)) <= 1e-12
    with pytest.raises(DomainError):
        empirical.log_returns(series, 500)


def test_summary_statistics():
    stats = empirical.summary_statistics(_series([3.0, 1.0, 2.0, 10.0]))
    assert stats == {"count": 4, "mean": 4.0, "median": 2.5, "max": 10.0, "min": 1.0}


# --- rolling exits ------------------------------------------------------------

def test_doubling_series_exits_at_doubling_index():
    closes = 100.0 * 2.0 ** (np.arange(40) / 10.0)
    exits = empirical.rolling_exit_times(_series(closes), math.log(2.0) - 1e-12)
    # from every start that has ten more days, the price doubles exactly ten days later
    full = exits.starts <= 29
    assert np.all(exits.times[full] == 10)
    assert np.all(exits.times[~full] == -1)


def test_huge_threshold_censors_everything():
    series = empirical.fixture_prices(600, 1)
    for mode in ("up", "down"):
        exits = empirical.rolling_exit_times(series, 10.0, mode)
        assert exits.censored_count == exits.window_count
        left, right, counts = exits.histogram()
        assert counts.size == 0


def test_down_mode_mirrors_up():
    series = empirical.fixture_prices(800, 2)
    mirrored = empirical.PriceSeries(series.dates, 1.0 / series.closes)
    up = empirical.rolling_exit_times(mirrored, 0.03, "up", 3)
    down = empirical.rolling_exit_times(series, 0.03, "down", 3)
    assert np.array_equal(up.times, down.times)


@given(
    seed=st.integers(0, 2**32),
    factor=st.floats(1e-3, 1e3),
    threshold=st.floats(0.005, 0.2),
    stride=st.integers(1, 10),
    mode=st.sampled_from(["up", "down"]),
)
def test_scale_invariance_and_counts(seed, factor, threshold, stride, mode):
    series = empirical.synthetic_prices(300, seed)
    base = empirical.rolling_exit_times(series, threshold, mode, stride)
    # prices are exactly representable multiples when the factor is a power of two
    power = 2.0 ** round(math.log2(factor))
    scaled = empirical.rolling_exit_times(series.scaled(power), threshold, mode, stride)
    assert np.array_equal(base.times, scaled.times)
    assert base.censored_count + base.exit_times.size == base.window_count
    left, right, counts = base.histogram()
    assert int(counts.sum()) == base.exit_times.size


def test_scale_invariance_generic_factor():
    series = empirical.fixture_prices(2000, 3)
    base = empirical.rolling_exit_times(series, 0.04, "up", 1)
    scaled = empirical.rolling_exit_times(series.scaled(math.pi), 0.04, "up", 1)
    assert np.array_equal(base.times, scaled.times)


def test_histogram_bins():
    series = _series([1.0, 1.0, 3.0, 1.0, 3.0, 3.0])
    exits = empirical.rolling_exit_times(series, 0.5)
    left, right, counts = exits.histogram()
    assert left.tolist() == [0.5, 1.5]
    assert np.all(right - left == 1.0)
    assert counts.tolist() == [2, 1]


def test_gbm_fixture_exit_law():
    # 2001 windows, censored at 400 days, against iid paths of the same generator and the Levy law
    threshold, stride, horizon = 0.05, 20, 400
    series = empirical.synthetic_prices(2000 * stride + horizon + 1, 2024)
    exits = empirical.rolling_exit_times(series, threshold, "up", stride, horizon=horizon)
    exits_ok = exits.starts + horizon < len(series)
    times = exits.times[exits_ok]
    assert times.size >= 2000
    nodes = np.arange(1, horizon + 1)
    emp = np.searchsorted(np.sort(times[times >= 0]), nodes, side="right") / times.size

    model = levy.ModelParams(mu=0.0, sigma=0.01, rho=0.0, lam=1.0)
    paths = [mc.simulate_logreturn(model, levy.GammaBDLP(1.0, 1.0), horizon, 1.0, (99, i)) for i in range(20000)]
    oracle = mc.empirical_exit(paths, threshold, "up", interpolate=False)
    assert np.max(np.abs(emp - oracle.cdf(nodes))) <= 0.05

    levy_law = special.erfc(threshold / (0.01 * np.sqrt(2.0 * nodes)))
    assert np.max(np.abs(emp - levy_law)) <= 0.05


# --- estimation ----------------------------------------------------------------

def test_oracle_estimator_recovers_gamma():
    rng = np.random.default_rng(5)
    sample = rng.gamma(2.0, 1.0 / 4.0, 10_000)
    nu, alpha, diag = empirical.estimate_gamma_params(sample, oracle=True)
    assert nu == pytest.approx(2.0, rel=0.1)
    assert alpha == pytest.approx(4.0, rel=0.1)
    assert diag["mode"] == "oracle"


def test_constant_proxy_degenerate():
    with pytest.raises(DegenerateMoments):
        empirical.estimate_gamma_params(np.full(300, 0.2), oracle=True)
    with pytest.raises(DegenerateMoments):
        empirical.estimate_gamma_params(_series([7.0] * 300))


def test_estimator_needs_observations():
    with pytest.raises(DomainError):
        empirical.estimate_gamma_params(np.ones(10), oracle=True)


@given(seed=st.integers(0, 2**32))
def test_estimator_time_reversal(seed):
    sample = np.random.default_rng(seed).gamma(1.5, 0.5, 400)
    forward = empirical.GammaMomentEstimator(oracle=True).fit(sample)
    backward = empirical.GammaMomentEstimator(oracle=True).fit(sample[::-1])
    assert backward.nu_ == pytest.approx(forward.nu_, rel=1e-12)
    assert backward.alpha_ == pytest.approx(forward.alpha_, rel=1e-12)


def test_estimator_on_prices_warns_and_fits():
    series = empirical.fixture_prices(2520, 7)
    with pytest.warns(UserWarning, match="noisy"):
        est = empirical.GammaMomentEstimator(lam=2.0).fit(series)
    assert est.nu_ > 0 and est.alpha_ > 0
    assert set(est.diagnostics_["autocorrelation"]) == {"1", "2", "5", "10"}
    assert est.bdlp() == levy.GammaBDLP(est.nu_, est.alpha_)


def test_estimator_sklearn_protocol():
    est = empirical.GammaMomentEstimator(lam=0.5, oracle=True)
    assert est.get_params() == {"lam": 0.5, "oracle": True, "min_observations": 250}
    twin = clone(est).set_params(lam=3.0)
    assert twin.lam == 3.0 and est.lam == 0.5
    assert not hasattr(twin, "nu_")


# --- emission ---------------------------------------------------------------------

def test_emit_empty_input_writes_manifest_only(tmp_path):
    files = emit.emit(tmp_path / "out", seed=1, version="test")
    assert [f.name for f in files] == ["manifest.json"]
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["manifest.json"]


def _density_and_histogram(out, seed):
    spec = levy.GammaBDLP(1.0, 1.0)
    curve = firstexit.exit_density_closed(spec, 1.0, "0:0.05:101")
    sample = mc.subordinator_exit_sample(spec, 1.0, 500, seed)
    counts, edges = np.histogram(sample.exit_times, bins=np.arange(0.0, 5.25, 0.25))
    return emit.emit(
        out,
        curves={"density": (curve.points(), curve.values)},
        histograms={"exit_hist": (edges[:-1], edges[1:], counts)},
        config={"spec": str(spec), "level": 1.0},
        seed=seed,
        version="test",
    )


def test_emit_density_histogram_pair_deterministic(tmp_path):
    first = _density_and_histogram(tmp_path / "a", 3)
    second = _density_and_histogram(tmp_path / "b", 3)
    assert [f.name for f in first] == ["density.csv", "exit_hist.csv", "manifest.json"]
    for f, g in zip(first, second):
        assert f.read_bytes() == g.read_bytes()
    head = (tmp_path / "a" / "density.csv").read_text().splitlines()
    assert head[0] == "x,value"
    assert (tmp_path / "a" / "exit_hist.csv").read_text().startswith("bin_left,bin_right,count\n")


def test_emit_floats_round_trip(tmp_path):
    values = np.array([1.0 / 3.0, math.pi * 1e-300, 2.0**60 + 1])
    emit.emit(tmp_path, curves={"c": (np.arange(3), values)}, version="test")
    rows = (tmp_path / "c.csv").read_text().splitlines()[1:]
    assert [float(r.split(",")[1]) for r in rows] == values.tolist()
    assert rows[0].split(",")[0] == "0"
