import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablespace.core import Panel
from stablespace.errors import DimensionTooLarge, InsufficientSample, MissingCriticalValue
from stablespace.johansen import (
    VecmResiduals,
    canonical_correlations,
    johansen_estimate,
    johansen_fit,
    trace_critical_values,
    trace_test,
    vecm_residuals,
)
from stablespace.simulation import SimulationSpec, simulate


def test_p1_residuals_are_raw_differences_and_levels():
    x = np.random.default_rng(0).standard_normal((20, 3)).cumsum(axis=0)
    res = vecm_residuals(x, 1)
    np.testing.assert_array_equal(res.R0, np.diff(x, axis=0))
    np.testing.assert_array_equal(res.R1, x[:-1])
    assert res.nobs == 19


def test_p2_residuals_orthogonal_to_lagged_differences():
    x = np.random.default_rng(1).standard_normal((60, 3)).cumsum(axis=0)
    res = vecm_residuals(x, 2)
    dx = np.diff(x, axis=0)
    Z = dx[:-1]  # dX_{n-1} aligned with the N = T - 2 observations
    assert res.nobs == 58
    scale = np.abs(Z).max() * max(np.abs(res.R0).max(), np.abs(res.R1).max()) * len(Z)
    assert np.abs(Z.T @ res.R0).max() <= 1e-8 * scale
    assert np.abs(Z.T @ res.R1).max() <= 1e-8 * scale


def test_insufficient_sample():
    with pytest.raises(InsufficientSample):
        vecm_residuals(np.random.default_rng(2).standard_normal((3, 3)), 2)


def test_identical_blocks_are_degenerate():
    R = np.random.default_rng(3).standard_normal((50, 3))
    lam, beta, degenerate = canonical_correlations(VecmResiduals(R, R.copy(), 1))
    np.testing.assert_allclose(lam, 1 - 1e-12, atol=1e-15)
    assert degenerate


def test_independent_blocks_have_small_correlations():
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        res = VecmResiduals(rng.standard_normal((500, 3)), rng.standard_normal((500, 3)), 1)
        hits += np.all(canonical_correlations(res)[0] < 0.05)
    assert hits / 100 >= 0.90


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5))
def test_eigenvalues_invariant_to_recoordinatizing_r1(seed, m):
    rng = np.random.default_rng(seed)
    R0 = rng.standard_normal((80, m))
    R1 = rng.standard_normal((80, m)) + 0.5 * R0
    M = rng.standard_normal((m, m)) + 3 * np.eye(m)
    a = canonical_correlations(VecmResiduals(R0, R1, 1))[0]
    b = canonical_correlations(VecmResiduals(R0, R1 @ M, 1))[0]
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_canonical_normalization_and_range():
    x = np.random.default_rng(4).standard_normal((200, 4)).cumsum(axis=0)
    res = vecm_residuals(x, 2)
    lam, beta, _ = canonical_correlations(res)
    S11 = res.R1.T @ res.R1 / res.nobs
    np.testing.assert_allclose(beta.T @ S11 @ beta, np.eye(4), atol=1e-8)
    assert np.all((lam >= 0) & (lam < 1))
    assert np.all(np.diff(lam) <= 0)


def test_trace_statistic_hand_value():
    stats, _ = trace_test([0.5, 0.2], 100)
    assert stats[0] == pytest.approx(-100 * (math.log(0.5) + math.log(0.8)), rel=1e-12)
    assert stats[0] == pytest.approx(91.63, abs=5e-3)
    assert stats[1] == pytest.approx(-100 * math.log(0.8), rel=1e-12)


def test_trace_all_zero_eigenvalues():
    stats, r = trace_test(np.zeros(4), 50)
    np.testing.assert_array_equal(stats, 0.0)
    assert r == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 0.999), min_size=1, max_size=11), st.integers(10, 1000))
def test_trace_sequence_nonincreasing(lam, N):
    lam = sorted(lam, reverse=True)
    stats, r = trace_test(lam, N)
    assert np.all(stats >= 0)
    assert np.all(np.diff(stats) <= 1e-12 * max(1.0, stats[0]))
    assert 0 <= r <= len(lam)


def test_trace_missing_critical_value():
    with pytest.raises(MissingCriticalValue):
        trace_test([0.9, 0.1], 100, significance=0.2)


def test_critical_values_match_statsmodels_table():
    from statsmodels.tsa.coint_tables import c_sjt

    table = trace_critical_values()
    for n in range(1, 12):
        for level, value in zip((0.10, 0.05, 0.01), c_sjt(n, -1)):
            assert table[(n, level)] == pytest.approx(value, abs=1e-12)


def test_dimension_limit():
    panel = Panel.from_array(np.random.default_rng(5).standard_normal((100, 12)).cumsum(axis=0))
    with pytest.raises(DimensionTooLarge):
        johansen_estimate(panel)
    with pytest.raises(DimensionTooLarge):
        johansen_fit(panel)


def test_rank_recovery_on_cointegrated_data():
    hits = 0
    for s in range(50):
        panel, _ = simulate(SimulationSpec.draw(5, 2, 400, seed=s), 0)
        hits += johansen_estimate(panel).r_hat == 2
    assert hits / 50 >= 0.60


def test_estimate_basis_shapes():
    panel, _ = simulate(SimulationSpec.draw(4, 2, 300, seed=1), 0)
    basis = johansen_estimate(panel)
    assert basis.basis.shape == (4, basis.r_hat)
    assert basis.scores.shape == (300, 4)
    assert basis.selected == tuple(range(basis.r_hat))
    np.testing.assert_allclose(basis.scores.mean(axis=0), 0.0, atol=1e-9)
