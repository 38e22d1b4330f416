import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rssi_mobility.trace import RssiSample, RssiTrace, TrialMeta, validate_trace


def make(t, s, **meta):
    return RssiTrace(t, s, TrialMeta(**meta))


def test_well_formed_trace_has_empty_report():
    report = validate_trace(make([0.0, 0.1, 0.2], [-40, -41, -39]))
    assert report.ok
    assert len(report) == 0


def test_repeated_timestamp_is_reported_with_index():
    report = validate_trace(make([0.0, 0.1, 0.1], [-40, -41, -39]))
    assert report.messages() == ["non-increasing timestamp at index 2"]
    assert report.violations[0].index == 2


def test_positive_dbm_is_out_of_range():
    report = validate_trace(make([0.0, 0.1, 0.2], [-40, 5, -39]))
    assert report.messages() == ["rssi out of range at index 1"]


def test_every_violation_is_reported():
    report = validate_trace(
        make([0.0, -0.1, 0.2, 0.2], [-40, -130, float("nan"), -20], nominal_speed=-1.0)
    )
    msgs = report.messages()
    assert any("nominal speed" in m for m in msgs)
    assert "invalid timestamp at index 1" in msgs
    assert "rssi out of range at index 1" in msgs
    assert "rssi out of range at index 2" in msgs
    assert "non-increasing timestamp at index 3" in msgs


def test_length_mismatch_rejected_at_construction():
    with pytest.raises(ValueError):
        RssiTrace([0.0, 1.0], [-40.0])


def test_trace_arrays_are_read_only():
    tr = make([0.0, 1.0], [-40.0, -41.0])
    with pytest.raises(ValueError):
        tr.rssi[0] = 0.0


def test_from_samples_round_trip():
    tr = RssiTrace.from_samples([(0.0, -40.0), (0.5, -42.5)])
    assert tr.samples == [RssiSample(0.0, -40.0), RssiSample(0.5, -42.5)]
    assert len(tr) == 2


@settings(max_examples=60)
@given(
    st.lists(st.floats(-200, 50, allow_nan=False), min_size=0, max_size=40),
    st.lists(st.floats(-1, 10, allow_nan=False), min_size=0, max_size=40),
)
def test_validation_is_idempotent_and_pure(rssi, times):
    n = min(len(rssi), len(times))
    tr = make(times[:n], rssi[:n])
    before = (tr.timestamps.copy(), tr.rssi.copy())
    first = validate_trace(tr)
    assert validate_trace(tr) == first
    assert np.array_equal(before[0], tr.timestamps)
    assert np.array_equal(before[1], tr.rssi)
