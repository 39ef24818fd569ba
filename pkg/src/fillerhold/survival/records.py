from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class SurvivalRecord:
    """Time to turn shift for one stimulus.

    ``event`` is True when a shift was observed; censored records carry the
    horizon as their time.  A shift detected on the very first silence frame
    has time 0.
    """

    time: float
    event: bool
    group: str = ""
    covariates: Mapping[str, float] | None = None
    id: str = ""
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.time) and self.time >= 0):
            raise ValueError(f"record {self.id!r}: time must be finite and >= 0, got {self.time}")


def as_arrays(records: Sequence[SurvivalRecord]) -> tuple[np.ndarray, np.ndarray]:
    t = np.array([r.time for r in records], dtype=np.float64)
    e = np.array([bool(r.event) for r in records], dtype=bool)
    return t, e


BASE_FIELDS = ["id", "group", "time", "event"]


def write_records_csv(records: Iterable[SurvivalRecord], path: str | Path,
                      covariate_names: Sequence[str] = (), meta_names: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BASE_FIELDS + list(meta_names) + list(covariate_names))
        for r in records:
            row = [r.id, r.group, repr(float(r.time)), int(r.event)]
            row += [r.meta.get(m, "") for m in meta_names]
            row += [repr(float(r.covariates[c])) for c in covariate_names] if covariate_names else []
            w.writerow(row)


def read_records_csv(path: str | Path) -> list[SurvivalRecord]:
    """Read records written by :func:`write_records_csv` (extra float columns become covariates)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        extra = [c for c in rd.fieldnames or [] if c not in BASE_FIELDS]
        for lineno, row in enumerate(rd, 2):
            try:
                cov, meta = {}, {}
                for c in extra:
                    try:
                        cov[c] = float(row[c])
                    except ValueError:
                        meta[c] = row[c]
                event = row["event"].strip().lower() in ("1", "true")
                out.append(SurvivalRecord(float(row["time"]), event, row.get("group", ""),
                                          cov or None, row.get("id", ""), meta))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad survival record ({exc})") from None
    return out
