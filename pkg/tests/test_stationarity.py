import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stablespace.errors import ConstantSeries, DegenerateVariance, TooShort
from stablespace.stationarity import (
    bartlett_long_run_variance,
    default_kpss_lags,
    kpss_critical_values,
    kpss_level,
    kpss_pvalue,
)


def brute_long_run_variance(e, lags):
    """Direct double sum, one product at a time."""
    T = len(e)
    total = sum(e[t] * e[t] for t in range(T)) / T
    for s in range(1, lags + 1):
        weight = 1.0 - s / (lags + 1.0)
        acc = 0.0
        for t in range(s, T):
            acc += e[t] * e[t - s]
        total += 2.0 * weight * acc / T
    return total


def brute_kpss(x, lags):
    T = len(x)
    mean = sum(x) / T
    e = [v - mean for v in x]
    partial, acc = [], 0.0
    for v in e:
        acc += v
        partial.append(acc)
    return sum(p * p for p in partial) / (T * T * brute_long_run_variance(e, lags))


def test_critical_value_table():
    assert kpss_critical_values() == {0.10: 0.347, 0.05: 0.463, 0.025: 0.574, 0.01: 0.739}


def test_lrv_zero_lag_is_mean_square():
    e = np.array([1.0, -2.0, 0.5, 3.0])
    assert bartlett_long_run_variance(e, 0) == pytest.approx(np.mean(e**2), rel=1e-15)


def test_lrv_alternating_series():
    e = np.array([1.0, -1.0, 1.0, -1.0])
    # 1 + 2 * (1/2) * (-3/4)
    assert bartlett_long_run_variance(e, 1) == pytest.approx(0.25, abs=1e-15)
    assert bartlett_long_run_variance(e, 1) == pytest.approx(brute_long_run_variance(e, 1), abs=1e-15)


def test_lrv_degenerate():
    with pytest.raises(DegenerateVariance):
        bartlett_long_run_variance(np.zeros(10), 2)


def test_kpss_constant_and_short():
    with pytest.raises(ConstantSeries):
        kpss_level(np.full(20, 3.0))
    with pytest.raises(TooShort):
        kpss_level(np.arange(5.0))


def test_kpss_eight_point_series():
    x = np.array([1, 2, 1, 2, 1, 2, 1, 2], dtype=float)
    # Eight points fall below the T >= 10 precondition; the formula is
    # checked on two repetitions of the same pattern.
    with pytest.raises(TooShort):
        kpss_level(x, lags=0)
    x = np.tile(x, 2)
    res = kpss_level(x, lags=0)
    assert res.statistic == pytest.approx(brute_kpss(list(x), 0), abs=1e-10)


def test_kpss_matches_brute_force_on_random_series():
    rng = np.random.default_rng(11)
    for _ in range(50):
        T = int(rng.integers(10, 200))
        x = rng.standard_normal(T).cumsum() if rng.random() < 0.5 else rng.standard_normal(T)
        lags = int(rng.integers(0, 8))
        res = kpss_level(x, lags)
        assert abs(res.statistic - brute_kpss(list(x), lags)) <= 1e-10 * max(1.0, res.statistic)


@pytest.mark.filterwarnings("ignore:The test statistic is outside")
def test_kpss_matches_statsmodels():
    from statsmodels.tsa.stattools import kpss

    rng = np.random.default_rng(5)
    for _ in range(10):
        x = rng.standard_normal(150).cumsum()
        stat, *_ = kpss(x, regression="c", nlags=4)
        assert kpss_level(x, 4).statistic == pytest.approx(stat, rel=1e-12)


def test_default_lag_rule():
    assert default_kpss_lags(100) == 4
    assert default_kpss_lags(500) == int(np.floor(4 * 5**0.25))


def test_pvalue_interpolation_and_clamp():
    cv = kpss_critical_values()
    for level, value in cv.items():
        assert kpss_pvalue(value) == pytest.approx(level, rel=1e-12)
    assert kpss_pvalue(0.0) == pytest.approx(0.10)
    assert kpss_pvalue(5.0) == pytest.approx(0.01)
    mid = kpss_pvalue((0.347 + 0.463) / 2)
    assert mid == pytest.approx(np.sqrt(0.10 * 0.05), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_pvalue_monotone(a, b):
    lo, hi = sorted((a, b))
    assert kpss_pvalue(lo) >= kpss_pvalue(hi)


series = arrays(np.float64, st.integers(10, 80), elements=st.floats(-100, 100, allow_nan=False))


@settings(max_examples=80, deadline=None)
@given(series, st.floats(-1e3, 1e3), st.floats(0.01, 100.0), st.booleans())
def test_kpss_invariances(x, shift, scale, flip):
    if np.ptp(x) < 1e-3:
        return
    try:
        base = kpss_level(x)
    except DegenerateVariance:
        return
    assert base.statistic >= 0.0
    # Demeaning in floating point makes location invariance hold to rounding.
    shifted = kpss_level(x + shift)
    assert shifted.statistic == pytest.approx(base.statistic, rel=1e-8, abs=1e-12)
    c = -scale if flip else scale
    assert kpss_level(c * x).statistic == pytest.approx(base.statistic, rel=1e-10)
    flags = [base.rejects[lvl] for lvl in (0.10, 0.05, 0.025, 0.01)]
    assert flags == sorted(flags, reverse=True)


def test_kpss_random_walk_rejection_rate():
    hits = 0
    for s in range(200):
        x = np.random.default_rng(s).standard_normal(500).cumsum()
        hits += kpss_level(x).statistic > 0.463
    assert hits / 200 >= 0.95


def test_reject_uses_table_then_pvalue():
    res = kpss_level(np.random.default_rng(0).standard_normal(300).cumsum())
    assert res.reject(0.05) == (res.statistic > 0.463)
    assert res.reject(0.07) == (res.pvalue < 0.07)
