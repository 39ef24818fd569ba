import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import km_oracle
from fillerhold.survival import (KMCurve, SurvivalRecord, dominates, kaplan_meier, kaplan_meier_by_group,
                                 read_km_csv, write_km_csv)


def test_hand_computed():
    km = kaplan_meier(time=[1, 2, 3, 4, 5], event=[1, 0, 1, 1, 0])
    assert km.steps[0].time == 0 and km.steps[0].survival == 1.0
    np.testing.assert_allclose(km.times, [0, 1, 2, 3, 4, 5])
    np.testing.assert_allclose(km.survival, [1, 0.8, 0.8, 0.8 * 2 / 3, 0.8 * 2 / 3 * 0.5, 0.8 * 2 / 3 * 0.5],
                               atol=1e-12)
    assert [s.at_risk for s in km.steps] == [5, 5, 4, 3, 2, 1]
    assert [s.events for s in km.steps] == [0, 1, 0, 1, 1, 0]


def test_right_continuity():
    km = kaplan_meier(time=[1, 2], event=[1, 1])
    np.testing.assert_allclose(km([0, 0.999, 1, 1.5, 2, 3]), [1, 1, 0.5, 0.5, 0, 0])


def test_ties_and_censoring_at_same_time():
    km = kaplan_meier(time=[2, 2, 2, 3], event=[1, 1, 0, 1])
    assert km(2) == pytest.approx(0.5)
    assert km(3) == 0.0


def test_event_at_time_zero():
    km = kaplan_meier(time=[0, 1], event=[1, 1])
    assert km(0) == 0.5


def test_records_grouping():
    recs = [SurvivalRecord(1, True, "b"), SurvivalRecord(2, True, "a"), SurvivalRecord(3, False, "a")]
    curves = kaplan_meier_by_group(recs)
    assert list(curves) == ["a", "b"]
    assert curves["a"].group == "a"
    assert dominates(curves["a"], curves["b"])
    assert not dominates(curves["b"], curves["a"])


def test_csv_roundtrip(tmp_path):
    curves = {"g": kaplan_meier(time=[0.1, 0.3, 0.3], event=[1, 0, 1], group="g")}
    write_km_csv(curves, tmp_path / "km.csv")
    back = read_km_csv(tmp_path / "km.csv")
    assert back["g"].steps == curves["g"].steps


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 8), st.booleans()), min_size=1, max_size=15))
def test_matches_oracle(data):
    t = [float(a) for a, _ in data]
    e = [b for _, b in data]
    km = kaplan_meier(time=t, event=e)
    for ti, si in km_oracle(t, e):
        assert km(ti) == pytest.approx(si, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 10), min_size=1, max_size=20))
def test_monotone_and_bounded(times):
    km = kaplan_meier(time=times, event=[True] * len(times))
    s = km.survival
    assert np.all(np.diff(s) <= 0) and s[-1] == pytest.approx(0.0, abs=1e-12) and s[0] == 1.0
