from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .records import SurvivalRecord
from .special import chi2_sf


class UndefinedStatistic(ValueError):
    """The log-rank variance is zero, so the statistic is undefined."""


@dataclass(frozen=True)
class LogRankResult:
    chi2: float
    p: float
    df: int
    groups: tuple[str, str]
    observed: tuple[float, float]
    expected: tuple[float, float]
    variance: float


def log_rank(records: Sequence[SurvivalRecord] | None = None, *, time=None, event=None, group=None) -> LogRankResult:
    """Two-group log-rank test with hypergeometric variance.

    Groups are taken from ``record.group`` (or the ``group`` array) and
    ordered by sorted label; the statistic is symmetric in that order.
    """
    if records is not None:
        time = [r.time for r in records]
        event = [r.event for r in records]
        group = [r.group for r in records]
    t = np.asarray(time, dtype=np.float64)
    e = np.asarray(event, dtype=bool)
    g = np.asarray(group)
    labels = sorted(set(g.tolist()))
    if len(labels) != 2:
        raise ValueError(f"log-rank needs exactly two groups, got {labels}")
    in1 = g == labels[0]

    # sweep distinct event times in ascending order
    ev_times = np.unique(t[e])
    o1 = e1 = var = 0.0
    for ti in ev_times:
        risk = t >= ti
        n = np.count_nonzero(risk)
        n1 = np.count_nonzero(risk & in1)
        dead = e & (t == ti)
        d = np.count_nonzero(dead)
        d1 = np.count_nonzero(dead & in1)
        o1 += d1
        e1 += d * n1 / n
        if n > 1:
            var += d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1)
    if not var > 0:
        raise UndefinedStatistic("log-rank variance is zero (no events with both groups at risk)")
    diff = o1 - e1
    chi2 = diff * diff / var
    if abs(diff) < 1e-12 * max(1.0, e1):
        chi2 = 0.0
    total_events = float(np.count_nonzero(e))
    return LogRankResult(float(chi2), chi2_sf(chi2, 1), 1, (labels[0], labels[1]),
                         (float(o1), total_events - o1), (float(e1), total_events - e1), float(var))
