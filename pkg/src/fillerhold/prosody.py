"""Prosodic and lexical covariates of filler tokens.

Pitch is tracked with a normalized cross-correlation peak picker and reported
in semitones re 1 Hz; intensity is mean frame level in dB re full scale.
Continuous covariates are standardized as ``(x - mean) / (2 * sd)``, pitch
and intensity per speaker, log duration over the whole population.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

logger = logging.getLogger(__name__)

EPS = 1e-10


class MissingF0(ValueError):
    """No voiced frame was found in a segment."""


class ZeroVarianceError(ValueError):
    """A standardization group has fewer than two values or zero spread."""


@dataclass(frozen=True)
class ProsodyConfig:
    frame_len: float = 0.025
    hop: float = 0.010
    f0_min: float = 50.0
    f0_max: float = 400.0
    voicing_threshold: float = 0.45
    rms_floor: float = 1e-3
    octave_ratio: float = 0.9  # prefer the shortest lag whose peak reaches this fraction of the best

    def __post_init__(self):
        if not 0 < self.f0_min < self.f0_max:
            raise ValueError("need 0 < f0_min < f0_max")
        if not 0 < self.hop <= self.frame_len:
            raise ValueError("need 0 < hop <= frame_len")


def _frame_starts(n: int, frame: int, hop: int) -> np.ndarray:
    if n < frame:
        return np.zeros(1, dtype=int)
    return np.arange(0, n - frame + 1, hop)


def _pick_peak(r: np.ndarray, ratio: float) -> int:
    best = r.max()
    inner = np.flatnonzero((r[1:-1] >= r[:-2]) & (r[1:-1] >= r[2:])) + 1
    for k in inner:
        if r[k] >= ratio * best:
            return int(k)
    return int(np.argmax(r))


def f0_track(segment: np.ndarray, sample_rate: int, config: ProsodyConfig = ProsodyConfig()) -> np.ndarray:
    """Per-frame F0 in Hz, NaN for unvoiced frames.

    Each 25 ms frame is cross-correlated with the same-length window starting
    one lag later, so every lag is scored over a full frame of samples.
    """
    x = np.asarray(segment, dtype=np.float64)
    n_frame = max(int(round(config.frame_len * sample_rate)), 2)
    hop = max(int(round(config.hop * sample_rate)), 1)
    lag_lo = max(int(math.floor(sample_rate / config.f0_max)), 2)
    lag_hi = int(math.ceil(sample_rate / config.f0_min))
    if len(x) < n_frame:
        raise ValueError(f"segment of {len(x)} samples is shorter than one frame ({n_frame})")
    if len(x) < n_frame + lag_hi + 1:
        # short segment: shrink the window so the longest lag still fits
        n_frame = len(x) - lag_hi - 1
        if n_frame < lag_lo:
            lag_hi = len(x) // 2
            n_frame = len(x) - lag_hi - 1
        if lag_hi <= lag_lo + 1:
            return np.full(1, np.nan)
    win = sliding_window_view(x, n_frame)
    energy = np.einsum("ij,ij->i", win, win)
    starts = _frame_starts(len(x) - lag_hi - 1, n_frame, hop)
    out = np.full(len(starts), np.nan)
    lags = np.arange(lag_lo - 1, lag_hi + 2)  # one extra on each side for interpolation
    for k, s in enumerate(starts):
        frame = win[s]
        e0 = energy[s]
        if math.sqrt(e0 / n_frame) < config.rms_floor:
            continue
        ys = win[s + lags]
        r = (ys @ frame) / np.sqrt(np.maximum(e0 * energy[s + lags], EPS * EPS))
        core = r[1:-1]
        if core.max() < config.voicing_threshold:
            continue
        j = _pick_peak(core, config.octave_ratio) + 1
        a, b, c = r[j - 1], r[j], r[j + 1]
        den = a - 2 * b + c
        shift = 0.5 * (a - c) / den if den < 0 else 0.0
        out[k] = sample_rate / (lags[j] + float(np.clip(shift, -0.5, 0.5)))
    return out


def hz_to_semitones(f0: float | np.ndarray) -> float | np.ndarray:
    return 12.0 * np.log2(f0)


def estimate_f0(segment: np.ndarray, sample_rate: int, config: ProsodyConfig = ProsodyConfig()) -> float | None:
    """Mean pitch over voiced frames in semitones re 1 Hz, or ``None`` if unvoiced."""
    track = f0_track(segment, sample_rate, config)
    voiced = track[np.isfinite(track)]
    if len(voiced) == 0:
        return None
    return float(np.mean(hz_to_semitones(voiced)))


def mean_intensity(segment: np.ndarray, sample_rate: int, config: ProsodyConfig = ProsodyConfig()) -> float:
    """Mean over frames of ``20 * log10(rms + 1e-10)``."""
    x = np.asarray(segment, dtype=np.float64)
    n_frame = int(round(config.frame_len * sample_rate))
    hop = max(int(round(config.hop * sample_rate)), 1)
    if len(x) == 0:
        raise ValueError("empty segment")
    if len(x) < n_frame:
        frames = x[None, :]
    else:
        frames = sliding_window_view(x, n_frame)[_frame_starts(len(x), n_frame, hop)]
    rms = np.sqrt(np.mean(frames * frames, axis=1))
    return float(np.mean(20.0 * np.log10(rms + EPS)))


@dataclass(frozen=True)
class StandardizationStats:
    grouping: str
    group: Hashable
    mean: float
    sd: float
    n: int

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / (2.0 * self.sd)


def fit_standardization(values: Sequence[float], groups: Sequence[Hashable] | None = None) -> dict:
    """Mean and sample SD per group (a single ``None`` group when ungrouped)."""
    v = np.asarray(values, dtype=np.float64)
    keys = [None] * len(v) if groups is None else list(groups)
    grouping = "global" if groups is None else "per-speaker"
    idx = defaultdict(list)
    for i, g in enumerate(keys):
        idx[g].append(i)
    stats = {}
    for g, members in idx.items():
        xs = v[members]
        sd = float(np.std(xs, ddof=1)) if len(xs) >= 2 else 0.0
        if len(xs) < 2 or not sd > 0:
            raise ZeroVarianceError(f"group {g!r} has {len(xs)} value(s) with zero variance; cannot standardize")
        stats[g] = StandardizationStats(grouping, g, float(np.mean(xs)), sd, len(xs))
    return stats


def standardize(values: Sequence[float], groups: Sequence[Hashable] | None = None):
    """Return ``((x - group_mean) / (2 * group_sd), stats_by_group)``."""
    stats = fit_standardization(values, groups)
    keys = [None] * len(values) if groups is None else list(groups)
    v = np.asarray(values, dtype=np.float64)
    out = np.array([stats[g].apply(x) for x, g in zip(v, keys)], dtype=np.float64)
    return out, stats


@dataclass(frozen=True)
class RawProsody:
    f0: float | None  # semitones
    intensity: float  # dB
    log_duration: float  # log seconds


@dataclass(frozen=True)
class CovariateVector:
    f0_std: float
    intensity_std: float
    log_duration_std: float
    lex_um: int
    pos_mid: int

    @property
    def f0_x_lexum(self) -> float:
        return self.f0_std * self.lex_um

    def as_dict(self) -> dict:
        return {"f0_std": self.f0_std, "intensity_std": self.intensity_std, "lex_um": self.lex_um,
                "log_duration_std": self.log_duration_std, "pos_mid": self.pos_mid,
                "f0_x_lexum": self.f0_x_lexum}


@dataclass(frozen=True)
class CovariateStats:
    f0: Mapping[Hashable, StandardizationStats]
    intensity: Mapping[Hashable, StandardizationStats]
    duration: StandardizationStats


def speaker_key(filler) -> str:
    return f"{filler.session_id}:{filler.speaker.value}"


def filler_segment(filler, audio: np.ndarray, sample_rate: int) -> np.ndarray:
    a = int(round(filler.start * sample_rate))
    b = int(round(filler.end * sample_rate))
    if a < 0 or b > len(audio) or b <= a:
        raise ValueError(f"filler {filler.id} interval outside audio")
    return audio[a:b, filler.speaker.ordinal]


def measure_filler(filler, audio: np.ndarray, sample_rate: int, config: ProsodyConfig = ProsodyConfig()) -> RawProsody:
    seg = filler_segment(filler, audio, sample_rate)
    return RawProsody(estimate_f0(seg, sample_rate, config), mean_intensity(seg, sample_rate, config),
                      math.log(filler.duration))


def fit_covariate_stats(fillers: Sequence, raws: Sequence[RawProsody]) -> CovariateStats:
    keys = [speaker_key(f) for f in fillers]
    if any(r.f0 is None for r in raws):
        raise MissingF0("fit standardization on voiced fillers only")
    return CovariateStats(
        f0=fit_standardization([r.f0 for r in raws], keys),
        intensity=fit_standardization([r.intensity for r in raws], keys),
        duration=fit_standardization([r.log_duration for r in raws])[None],
    )


def assemble(filler, raw: RawProsody, stats: CovariateStats) -> CovariateVector:
    if raw.f0 is None:
        raise MissingF0(f"filler {filler.id} has no voiced frames")
    if filler.position is None:
        raise ValueError(f"filler {filler.id} is not inside any dialog act")
    key = speaker_key(filler)
    return CovariateVector(
        f0_std=float(stats.f0[key].apply(raw.f0)),
        intensity_std=float(stats.intensity[key].apply(raw.intensity)),
        log_duration_std=float(stats.duration.apply(raw.log_duration)),
        lex_um=int(filler.lexical_form == "um"),
        pos_mid=int(filler.position == "mid"),
    )


def extract_covariates(filler, audio: np.ndarray, sample_rate: int, stats: CovariateStats,
                       config: ProsodyConfig = ProsodyConfig()) -> CovariateVector:
    """Measure one filler and standardize it against population ``stats``."""
    return assemble(filler, measure_filler(filler, audio, sample_rate, config), stats)


def covariate_table(fillers: Sequence, audio_for, sample_rate_for, config: ProsodyConfig = ProsodyConfig()):
    """Covariates for a filler population.

    ``audio_for(session_id)`` and ``sample_rate_for(session_id)`` supply the
    session audio.  Returns ``(rows, excluded)`` where ``rows`` is a list of
    ``(filler, CovariateVector)`` and ``excluded`` maps filler id to a reason.
    Speakers left with fewer than two measurable fillers are excluded, since
    their pitch and intensity cannot be standardized.
    """
    excluded: dict[str, str] = {}
    kept, raws = [], []
    for f in fillers:
        if f.position is None:
            excluded[f.id] = "outside any dialog act"
            continue
        raw = measure_filler(f, audio_for(f.session_id), sample_rate_for(f.session_id), config)
        if raw.f0 is None:
            excluded[f.id] = "no voiced frames"
            continue
        kept.append(f)
        raws.append(raw)
    by_spk = defaultdict(list)
    for i, f in enumerate(kept):
        by_spk[speaker_key(f)].append(i)
    drop = set()
    for key, members in by_spk.items():
        vals = [raws[i] for i in members]
        if len(members) < 2 or np.std([r.f0 for r in vals]) == 0 or np.std([r.intensity for r in vals]) == 0:
            drop.update(members)
            for i in members:
                excluded[kept[i].id] = f"speaker {key} has too few distinct fillers to standardize"
    kept_idx = [i for i in range(len(kept)) if i not in drop]
    kept = [kept[i] for i in kept_idx]
    raws = [raws[i] for i in kept_idx]
    for fid, why in excluded.items():
        logger.info("excluding filler %s from covariate table: %s", fid, why)
    if not kept:
        return [], excluded
    stats = fit_covariate_stats(kept, raws)
    return [(f, assemble(f, r, stats)) for f, r in zip(kept, raws)], excluded
