"""Turn-hold predictors and turn-shift time extraction.

Three predictor kinds share one entry point, :func:`predict`:

``stream-file``
    reads precomputed ``VAPD``/``VAPT`` streams named ``<stimulus id>.vapd``
    (or ``.vapt``) from a directory.
``external-process``
    runs a command with the stimulus WAV path as its last argument and reads a
    stream from its standard output.
``synthetic``
    a closed-form hold curve driven by the stimulus *metadata*, not its audio.
    It exists to test the pipeline end to end with known effects; it says
    nothing about real turn-taking behaviour.

``VAPT`` values are turn-hold probabilities from speaker A's point of view;
they are flipped when the stimulus' current speaker is B.
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import tempfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import audio as _audio
from . import streams
from .dialog import Speaker
from .vap import THPSeries, thp_stream

if TYPE_CHECKING:
    from .stimulus import Stimulus

PREDICTOR_CMD_ENV = "FILLERHOLD_PREDICTOR_CMD"
KINDS = ("stream-file", "external-process", "synthetic")


class PredictorError(RuntimeError):
    """The predictor failed or produced unusable output."""


class CoverageError(ValueError):
    """A THP series does not cover the requested silence horizon."""


@dataclass(frozen=True)
class SyntheticConfig:
    base_hold_time: float = 1.0
    filler_hold_bonus: float = 2.0
    ynq_shift_time: float = 0.8
    decay_rate: float = 10.0
    noise_seed: int = 0
    hold_jitter: float = 0.25  # log-normal sigma on filler-driven hold times
    duration_effect: float = 0.0  # seconds of extra hold per log-second of filler duration
    reference_duration: float = 0.4
    activity_floor: float = 0.01

    def __post_init__(self):
        for name in ("base_hold_time", "filler_hold_bonus", "ynq_shift_time", "hold_jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.decay_rate <= 0:
            raise ValueError("decay_rate must be > 0")
        if self.reference_duration <= 0:
            raise ValueError("reference_duration must be > 0")


@dataclass(frozen=True)
class PredictorSpec:
    kind: str = "synthetic"
    frame_rate: float = 50.0
    stream_dir: str | None = None
    command: Sequence[str] | None = None
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    timeout: float | None = None
    frame_tolerance: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"predictor kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "stream-file" and not self.stream_dir:
            raise ValueError("stream-file predictor needs stream_dir")
        if self.kind == "external-process" and not self.resolved_command():
            raise ValueError(f"external-process predictor needs a command (or ${PREDICTOR_CMD_ENV})")

    def resolved_command(self) -> list[str]:
        cmd = self.command
        if not cmd:
            cmd = os.environ.get(PREDICTOR_CMD_ENV, "")
        if isinstance(cmd, str):
            cmd = shlex.split(cmd)
        return list(cmd)


@dataclass(frozen=True)
class ShiftOutcome:
    time: float | None
    censored: bool
    horizon: float = 10.0

    def __post_init__(self):
        if self.censored == (self.time is not None):
            raise ValueError("exactly one of time / censored must be set")
        if self.time is not None and not 0 <= self.time <= self.horizon:
            raise ValueError(f"shift time {self.time} outside [0, {self.horizon}]")

    @property
    def observed_time(self) -> float:
        """Shift time, or the horizon for censored outcomes."""
        return self.horizon if self.censored else self.time


def _frame_of(t: float, rate: float) -> int:
    return math.ceil(round(t * rate, 9))


def expected_frames(stim: "Stimulus", rate: float) -> int:
    return _frame_of(stim.duration, rate)


def _sigmoid_hold(t: np.ndarray, t_hold: float, decay: float) -> np.ndarray:
    z = np.clip(decay * (t - t_hold), -700, 700)
    return 1.0 / (1.0 + np.exp(z))


def synthetic_hold_time(stim: "Stimulus", cfg: SyntheticConfig) -> float:
    """Planted hold time (seconds after silence onset) for ``stim``."""
    meta = stim.metadata
    filler = bool(meta.get("trailing_filler"))
    extra = 0.0
    if filler:
        extra = cfg.filler_hold_bonus
        if cfg.duration_effect and meta.get("filler_duration"):
            extra += cfg.duration_effect * math.log(meta["filler_duration"] / cfg.reference_duration)
    if meta.get("ynq"):
        nominal, jittered = cfg.ynq_shift_time, extra
    else:
        nominal, jittered = 0.0, cfg.base_hold_time + extra
    if cfg.hold_jitter and jittered:
        rng = np.random.default_rng([cfg.noise_seed, zlib.crc32(stim.id.encode())])
        jittered *= math.exp(cfg.hold_jitter * rng.standard_normal())
    return max(nominal + jittered, 0.0)


def _frame_rms(x: np.ndarray, sr: int, rate: float, n: int) -> np.ndarray:
    hop = sr / rate
    if hop == int(hop) and n * int(hop) <= len(x):
        frames = np.ascontiguousarray(x[: n * int(hop)]).reshape(n, int(hop))
        return np.sqrt(np.einsum("ij,ij->i", frames, frames) / int(hop))
    edges = np.minimum(np.round(np.arange(n + 1) * hop).astype(np.int64), len(x))
    out = np.zeros(n)
    for i in range(n):
        seg = x[edges[i]:edges[i + 1]]
        if len(seg):
            out[i] = math.sqrt(float(np.dot(seg, seg)) / len(seg))
    return out


def predict_synthetic(stim: "Stimulus", cfg: SyntheticConfig, rate: float = 50.0) -> THPSeries:
    n = expected_frames(stim, rate)
    onset = _frame_of(stim.silence_onset, rate)
    cur, oth = stim.current_speaker.ordinal, stim.current_speaker.other.ordinal
    cur_on = _frame_rms(stim.audio[:, cur], stim.sample_rate, rate, n) > cfg.activity_floor
    oth_on = _frame_rms(stim.audio[:, oth], stim.sample_rate, rate, n) > cfg.activity_floor
    values = np.empty(n)
    last = 0.9
    for f in range(min(onset, n)):
        if cur_on[f]:
            last = 0.9
        elif oth_on[f]:
            last = 0.1
        values[f] = last
    if onset < n:
        t = (np.arange(onset, n) - onset + 0.5) / rate
        values[onset:] = _sigmoid_hold(t, synthetic_hold_time(stim, cfg), cfg.decay_rate)
    return THPSeries(rate, values, stim.current_speaker)


def series_from_stream(stream: streams.Stream, current: Speaker) -> THPSeries:
    if stream.kind == b"VAPD":
        return thp_stream(stream.data, current, frame_rate=stream.frame_rate)
    v = np.clip(stream.data, 0.0, 1.0)
    return THPSeries(stream.frame_rate, v if current is Speaker.A else 1.0 - v, current)


def _check_frames(series: THPSeries, stim: "Stimulus", spec: PredictorSpec) -> THPSeries:
    want = expected_frames(stim, series.frame_rate)
    if abs(len(series) - want) > spec.frame_tolerance:
        raise PredictorError(f"{stim.id}: predictor returned {len(series)} frames, expected {want}")
    return series


def predict(stim: "Stimulus", spec: PredictorSpec) -> THPSeries:
    """Turn-hold probability series for one stimulus."""
    if spec.kind == "synthetic":
        return predict_synthetic(stim, spec.synthetic, spec.frame_rate)
    if spec.kind == "stream-file":
        base = Path(spec.stream_dir)
        for ext in (".vapd", ".vapt"):
            p = base / (stim.id + ext)
            if p.exists():
                try:
                    s = streams.read_stream(p)
                    series = series_from_stream(s, stim.current_speaker)
                except ValueError as exc:
                    raise PredictorError(f"{stim.id}: {exc}") from exc
                return _check_frames(series, stim, spec)
        raise PredictorError(f"{stim.id}: no stream file in {base}")
    # external process
    with tempfile.TemporaryDirectory() as tmp:
        wav = Path(tmp) / f"{stim.id}.wav"
        _audio.write_wav(wav, stim.audio, stim.sample_rate)
        try:
            proc = subprocess.run(spec.resolved_command() + [str(wav)], capture_output=True, timeout=spec.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise PredictorError(f"{stim.id}: {exc}") from exc
    if proc.returncode != 0:
        err = proc.stderr.decode(errors="replace").strip()[-500:]
        raise PredictorError(f"{stim.id}: predictor exited with status {proc.returncode}: {err}")
    try:
        series = series_from_stream(streams.decode_stream(proc.stdout), stim.current_speaker)
    except ValueError as exc:
        raise PredictorError(f"{stim.id}: {exc}") from exc
    return _check_frames(series, stim, spec)


def turn_shift_time(series: THPSeries, silence_onset: float, threshold: float = 0.5,
                    horizon: float = 10.0) -> ShiftOutcome:
    """First frame at or after ``silence_onset`` whose THP is strictly below ``threshold``.

    The time is measured in whole frames from the onset frame; no frame below
    threshold within ``horizon`` seconds gives a censored outcome.
    """
    rate = series.frame_rate
    onset = _frame_of(silence_onset, rate)
    n_h = int(round(horizon * rate))
    if len(series) < onset + n_h:
        raise CoverageError(f"series has {len(series)} frames; need {onset + n_h} to cover "
                            f"{horizon}s after onset {silence_onset}s")
    below = np.flatnonzero(series.values[onset:onset + n_h] < threshold)
    if len(below) == 0:
        return ShiftOutcome(None, True, horizon)
    return ShiftOutcome(float(below[0]) / rate, False, horizon)
