"""Voice-activity projection labels and turn-hold probability.

A projection label packs the future activity of both speakers over four
bins into one byte.  Bit ``4 * s + b`` is set when speaker ``s`` (A = 0,
B = 1) is active in bin ``b``, so speaker A occupies the low nibble and
bin 0 is the least-significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dialog import Speaker

N_BINS = 4
N_LABELS = 256
SUM_TOLERANCE = 1e-3


@dataclass(frozen=True)
class BinLayout:
    widths: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)

    def __post_init__(self):
        if len(self.widths) != N_BINS or any(w <= 0 for w in self.widths):
            raise ValueError(f"need {N_BINS} strictly positive bin widths, got {self.widths}")

    @property
    def boundaries(self) -> tuple[float, ...]:
        out = [0.0]
        for w in self.widths:
            out.append(round(out[-1] + w, 12))
        return tuple(out)

    @property
    def horizon(self) -> float:
        return self.boundaries[-1]

    def roi_bins(self, roi: float) -> int:
        """Number of leading bins exactly covering ``[0, roi]``."""
        for k, b in enumerate(self.boundaries[1:], 1):
            if math.isclose(b, roi, abs_tol=1e-9):
                return k
        raise ValueError(f"roi {roi}s is not on a bin boundary {self.boundaries[1:]}")


DEFAULT_LAYOUT = BinLayout()


def encode_label(bits) -> int:
    """Encode a 2x4 boolean activity pattern as a label index."""
    b = np.asarray(bits, dtype=bool)
    if b.shape != (2, N_BINS):
        raise ValueError(f"bits must have shape (2, {N_BINS}), got {b.shape}")
    return int(np.dot(b.ravel().astype(np.int64), 1 << np.arange(2 * N_BINS)))


def decode_label(index: int) -> np.ndarray:
    """Inverse of :func:`encode_label`; returns a (2, 4) boolean array."""
    if not 0 <= int(index) < N_LABELS or int(index) != index:
        raise ValueError(f"label index must be an integer in [0, 255], got {index}")
    return ((int(index) >> np.arange(2 * N_BINS)) & 1).astype(bool).reshape(2, N_BINS)


# (256, 2, 4) activity table
LABEL_BITS = np.stack([decode_label(i) for i in range(N_LABELS)])


def swap_speakers(probs: np.ndarray) -> np.ndarray:
    """Reorder a label distribution as if the two speakers traded places."""
    idx = np.arange(N_LABELS)
    swapped = ((idx & 0xF) << 4) | (idx >> 4)
    out = np.empty_like(np.asarray(probs))
    out[..., swapped] = probs
    return out


def validate_distribution(probs, frame: int | None = None) -> np.ndarray:
    """Check a 256-way distribution, renormalizing small sum errors."""
    p = np.asarray(probs, dtype=np.float64)
    where = "" if frame is None else f"frame {frame}: "
    if p.shape != (N_LABELS,):
        raise ValueError(f"{where}distribution must have {N_LABELS} entries, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError(f"{where}distribution has negative or non-finite entries")
    s = p.sum()
    if abs(s - 1.0) > SUM_TOLERANCE:
        raise ValueError(f"{where}distribution sums to {s:.6g}, not 1")
    return p / s if s != 1.0 else p


@dataclass(frozen=True)
class THPSeries:
    frame_rate: float
    values: np.ndarray
    current_speaker: Speaker

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or np.any((v < 0) | (v > 1)) or not np.all(np.isfinite(v)):
            raise ValueError("THP values must be a 1-D sequence in [0, 1]")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) / self.frame_rate


def _roi_weights(layout: BinLayout, roi: float, method: str) -> np.ndarray:
    """Per-label ROI activity weight for each speaker, shape (256, 2)."""
    k = layout.roi_bins(roi)
    if method == "duration":
        # integer-scaled widths keep point-mass cases exact
        fr = [Fraction(w).limit_denominator(10**6) for w in layout.widths[:k]]
        den = math.lcm(*(f.denominator for f in fr))
        w = np.array([float(f * den) for f in fr])
    elif method == "count":
        w = np.ones(k)
    else:
        raise ValueError(f"unknown THP weighting {method!r}")
    return LABEL_BITS[:, :, :k].astype(np.float64) @ w


def thp(dist, current: Speaker, roi: float = 0.6, layout: BinLayout = DEFAULT_LAYOUT,
        method: str = "duration") -> float:
    """Turn-hold probability of ``current`` under one label distribution.

    The expected ROI activity of each speaker is weighted by bin width
    (``method="duration"``) or by bin count (``"count"``); the result is the
    current speaker's share of the total.  Returns 0.5 when the distribution
    places no mass on ROI activity.
    """
    p = validate_distribution(dist)
    return float(_thp_many(p[None, :], current, roi, layout, method)[0])


def _thp_many(p: np.ndarray, current: Speaker, roi, layout, method) -> np.ndarray:
    w = _roi_weights(layout, roi, method)
    cur = p @ w[:, current.ordinal]
    oth = p @ w[:, current.other.ordinal]
    den = cur + oth
    out = np.full(len(p), 0.5)
    nz = den > 0
    out[nz] = cur[nz] / den[nz]
    return np.clip(out, 0.0, 1.0)


def thp_stream(frames: Sequence | np.ndarray, current: Speaker, frame_rate: float = 50.0,
               roi: float = 0.6, layout: BinLayout = DEFAULT_LAYOUT, method: str = "duration") -> THPSeries:
    """Apply :func:`thp` to every frame of a distribution stream."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.size == 0 or len(arr) == 0:
        raise ValueError("empty distribution stream")
    if arr.ndim != 2 or arr.shape[1] != N_LABELS:
        raise ValueError(f"stream must have shape (n_frames, {N_LABELS}), got {arr.shape}")
    bad = ~np.all(np.isfinite(arr), axis=1) | np.any(arr < 0, axis=1)
    sums = np.where(bad, np.nan, arr.sum(axis=1))
    bad |= ~(np.abs(sums - 1.0) <= SUM_TOLERANCE)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        validate_distribution(arr[i], frame=i)
    arr = arr / sums[:, None]
    return THPSeries(frame_rate, _thp_many(arr, current, roi, layout, method), current)
