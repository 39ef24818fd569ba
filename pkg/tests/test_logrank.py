import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import logrank_oracle
from fillerhold.survival import SurvivalRecord, UndefinedStatistic, log_rank


def test_identical_groups():
    t = [1, 2, 3, 4, 5]
    e = [1, 1, 0, 1, 1]
    res = log_rank(time=t + t, event=e + e, group=["a"] * 5 + ["b"] * 5)
    assert res.chi2 == 0.0 and res.p == 1.0


def test_known_value():
    # statsmodels survdiff gives chi2 = 3.3453312727026203, p = 0.06739591140855239
    t = [1, 2, 3, 4, 5, 6, 2, 3, 5, 7, 8, 9]
    e = [1, 1, 1, 0, 1, 1, 1, 0, 1, 1, 1, 0]
    g = ["a"] * 6 + ["b"] * 6
    res = log_rank(time=t, event=e, group=g)
    o, ex, v = logrank_oracle(t, e, g, "a")
    assert res.observed[0] == o and res.expected[0] == pytest.approx(ex, abs=1e-12)
    assert res.chi2 == pytest.approx((o - ex) ** 2 / v, rel=1e-12)
    assert res.chi2 == pytest.approx(3.3453312727026203, rel=1e-12)
    assert res.p == pytest.approx(0.06739591140855239, rel=1e-9)


def test_symmetric_in_group_order():
    t = [1, 3, 4, 2, 5, 6]
    e = [1, 1, 1, 1, 0, 1]
    r1 = log_rank(time=t, event=e, group=list("aaabbb"))
    r2 = log_rank(time=t, event=e, group=list("bbbaaa"))
    assert r1.chi2 == pytest.approx(r2.chi2, rel=1e-12)


def test_errors():
    with pytest.raises(ValueError, match="two groups"):
        log_rank(time=[1, 2], event=[1, 1], group=["a", "a"])
    with pytest.raises(UndefinedStatistic):
        log_rank(time=[1, 2], event=[0, 0], group=["a", "b"])


def test_records_interface():
    recs = [SurvivalRecord(t, True, g) for t, g in [(1, "x"), (2, "y"), (3, "x"), (4, "y")]]
    assert log_rank(recs).groups == ("x", "y")


def test_censored_at_horizon_stay_in_risk_set():
    t = [1, 2, 10, 10, 1, 3, 4, 5]
    e = [1, 1, 0, 0, 1, 1, 1, 1]
    g = ["a"] * 4 + ["b"] * 4
    res = log_rank(time=t, event=e, group=g)
    o, ex, v = logrank_oracle(t, e, g, "a")
    assert res.variance == pytest.approx(v, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 6), st.booleans(), st.sampled_from("ab")), min_size=2, max_size=12))
def test_matches_oracle(data):
    t, e, g = map(list, zip(*data))
    if len(set(g)) < 2:
        return
    o, ex, v = logrank_oracle(t, e, g, "a")
    if not v > 0:
        with pytest.raises(UndefinedStatistic):
            log_rank(time=t, event=e, group=g)
        return
    res = log_rank(time=t, event=e, group=g)
    assert res.observed[0] == pytest.approx(o, abs=1e-9)
    assert res.expected[0] == pytest.approx(ex, abs=1e-9)
    assert res.variance == pytest.approx(v, abs=1e-9)
    assert 0.0 <= res.p <= 1.0
