import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rssi_mobility.channel_sim import SimConfig, simulate_trace
from rssi_mobility.errors import EmptyTrace, InsufficientSamples, ZeroVariance
from rssi_mobility.features import (
    compute_acf,
    compute_mean,
    compute_min_max,
    compute_moments,
    default_max_lag,
    extract_features,
)

dbm_lists = st.lists(
    st.floats(-100, -20, allow_nan=False, allow_infinity=False), min_size=2, max_size=80
)
acf_lists = st.lists(
    st.floats(-100, -20, allow_nan=False, allow_infinity=False), min_size=3, max_size=80
)


def acf_oracle(x, max_lag):
    # full cross-correlation route, independent of the per-lag dot products
    d = np.asarray(x, float) - np.mean(x)
    full = np.correlate(d, d, mode="full")[len(d) - 1:]
    return full[: max_lag + 1] / full[0]


@pytest.mark.parametrize(
    "values, expected",
    [([-40, -42, -44], -42.0), ([-50], -50.0), ([-34.27, -34.27], -34.27)],
)
def test_mean(values, expected):
    assert compute_mean(values) == pytest.approx(expected, abs=1e-12)


def test_empty_trace_errors():
    for fn in (compute_mean, compute_min_max, compute_moments):
        with pytest.raises(EmptyTrace):
            fn([])


@pytest.mark.parametrize(
    "values, expected", [([-40, -70, -55], (-70, -40)), ([-60], (-60, -60))]
)
def test_min_max(values, expected):
    assert compute_min_max(values) == expected


def test_min_max_on_simulated_trace_matches_linear_scan():
    trace = simulate_trace(SimConfig(speed=0.6, seed=7))
    values = trace.rssi.tolist()[:200]
    lo = hi = values[0]
    for v in values[1:]:
        lo = v if v < lo else lo
        hi = v if v > hi else hi
    assert compute_min_max(values) == (lo, hi)


def test_moments_two_point():
    var, skew, kurt = compute_moments([-1.0, 1.0])
    assert (var, skew, kurt) == pytest.approx((1.0, 0.0, 1.0), abs=1e-12)


def test_moments_symmetric_has_zero_skew():
    _, skew, _ = compute_moments([-2, -1, 0, 1, 2])
    assert skew == pytest.approx(0.0, abs=1e-12)


def test_gaussian_kurtosis_is_raw_not_excess(rng):
    _, _, kurt = compute_moments(rng.standard_normal(200_000))
    assert kurt == pytest.approx(3.0, abs=0.05)


def test_constant_trace_has_zero_variance():
    with pytest.raises(ZeroVariance):
        compute_moments([-50.0] * 5)
    with pytest.raises(ZeroVariance):
        compute_acf([-50.0] * 10, 3)


def test_moments_need_two_samples():
    with pytest.raises(InsufficientSamples):
        compute_moments([-50.0])


def test_acf_alternating_sequence():
    acf = compute_acf([1, -1, 1, -1], max_lag=1)
    assert acf.coefficients[0] == 1.0
    assert acf.coefficients[1] == pytest.approx(-0.75, abs=1e-15)


def test_acf_requires_max_lag_plus_two_samples():
    with pytest.raises(InsufficientSamples):
        compute_acf([1.0, 2.0, 3.0], max_lag=2)
    assert compute_acf([1.0, 2.0, 3.0, 5.0], max_lag=2).max_lag == 2


def test_acf_white_noise_is_small():
    x = np.random.default_rng(2024).standard_normal(10_000)
    coef = compute_acf(x, 30).coefficients
    assert np.all(np.abs(coef[1:]) < 0.05)


def test_default_max_lag():
    assert default_max_lag(1000) == 50
    assert default_max_lag(81) == 20


def test_acf_matches_correlate_oracle(rng):
    x = np.cumsum(rng.standard_normal(300))
    np.testing.assert_allclose(compute_acf(x, 40).coefficients, acf_oracle(x, 40), atol=1e-12)


def test_extract_features_bundle():
    fv = extract_features([-40.0, -42.0, -44.0, -46.0])
    assert fv.min == -46.0 and fv.max == -40.0
    assert fv.mean == -43.0
    assert fv.variance == pytest.approx(5.0)


@settings(max_examples=80, deadline=None)
@given(acf_lists, st.floats(0.01, 100), st.floats(-50, 50))
def test_acf_affine_invariance(values, alpha, beta):
    x = np.asarray(values)
    if np.ptp(x) < 1e-6:
        return
    lag = min(5, x.size - 2)
    base = compute_acf(x, lag).coefficients
    moved = compute_acf(alpha * x + beta, lag).coefficients
    np.testing.assert_allclose(moved, base, atol=1e-9)


@settings(max_examples=80, deadline=None)
@given(acf_lists)
def test_acf_bounded_and_unit_at_zero(values):
    x = np.asarray(values)
    if np.ptp(x) < 1e-9:
        return
    coef = compute_acf(x, x.size - 2).coefficients
    assert coef[0] == 1.0
    assert np.all(np.abs(coef) <= 1.0 + 1e-12)


@settings(max_examples=80)
@given(dbm_lists)
def test_min_mean_max_ordering(values):
    lo, hi = compute_min_max(values)
    mean = compute_mean(values)
    assert lo - 1e-9 <= mean <= hi + 1e-9


@settings(max_examples=60)
@given(st.integers(1, 30).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-100, -20), min_size=n, max_size=n),
        st.lists(st.floats(-100, -20), min_size=n, max_size=n),
    )
))
def test_mean_of_concatenation(pair):
    a, b = pair
    expected = (compute_mean(a) + compute_mean(b)) / 2
    assert math.isclose(compute_mean(a + b), expected, abs_tol=1e-12)
