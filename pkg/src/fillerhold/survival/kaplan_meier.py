from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .records import SurvivalRecord, as_arrays


@dataclass(frozen=True)
class KMStep:
    time: float
    survival: float
    at_risk: int
    events: int


@dataclass(frozen=True)
class KMCurve:
    """Product-limit survival curve.

    ``steps[0]`` is the origin ``(0, 1.0)``; every later step is a distinct
    observed time with the survival *after* that time.
    """

    steps: tuple[KMStep, ...]
    group: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.steps])

    @property
    def survival(self) -> np.ndarray:
        return np.array([s.survival for s in self.steps])

    def __call__(self, t) -> np.ndarray:
        """Right-continuous step evaluation ``S(t)``."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=np.float64), side="right") - 1
        return self.survival[np.maximum(idx, 0)]


def kaplan_meier(records: Sequence[SurvivalRecord] | None = None, *, time=None, event=None, group: str = "") -> KMCurve:
    """Kaplan-Meier estimate from records or from ``time``/``event`` arrays."""
    if records is not None:
        t, e = as_arrays(records)
    else:
        t, e = np.asarray(time, dtype=np.float64), np.asarray(event, dtype=bool)
    if len(t) == 0:
        raise ValueError("no survival records")
    order = np.argsort(t, kind="mergesort")
    t, e = t[order], e[order]
    uniq, first = np.unique(t, return_index=True)
    deaths = np.add.reduceat(e.astype(np.int64), first)
    at_risk = len(t) - first
    steps = [KMStep(0.0, 1.0, int(len(t)), 0)]
    s = 1.0
    for ti, d, n in zip(uniq, deaths, at_risk):
        if d:
            s *= 1.0 - int(d) / int(n)
        steps.append(KMStep(float(ti), s, int(n), int(d)))
    return KMCurve(tuple(steps), group)


def kaplan_meier_by_group(records: Sequence[SurvivalRecord]) -> dict[str, KMCurve]:
    groups = sorted({r.group for r in records})
    return {g: kaplan_meier([r for r in records if r.group == g], group=g) for g in groups}


def dominates(upper: KMCurve, lower: KMCurve) -> bool:
    """True if ``upper(t) >= lower(t)`` at every step time of either curve."""
    grid = np.union1d(upper.times, lower.times)
    return bool(np.all(upper(grid) >= lower(grid) - 1e-15))


def write_km_csv(curves: Mapping[str, KMCurve], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "survival", "at_risk", "events", "group"])
        for g, c in curves.items():
            for s in c.steps:
                w.writerow([repr(float(s.time)), repr(float(s.survival)), s.at_risk, s.events, g])


def read_km_csv(path: str | Path) -> dict[str, KMCurve]:
    rows: dict[str, list[KMStep]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["group"], []).append(
                KMStep(float(row["time"]), float(row["survival"]), int(row["at_risk"]), int(row["events"])))
    return {g: KMCurve(tuple(s), g) for g, s in rows.items()}
