"""Two-speaker dialog model and transcript ingestion.

Transcripts are JSONL files with one ``word`` or ``da`` (dialog act) record
per line; audio is described by a small JSON manifest.  See the README for
both formats.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import audio as _audio

logger = logging.getLogger(__name__)

DA_MISMATCH_WARN = 0.5


class Speaker(enum.Enum):
    A = "A"
    B = "B"

    @property
    def ordinal(self) -> int:
        return 0 if self is Speaker.A else 1

    @property
    def other(self) -> "Speaker":
        return Speaker.B if self is Speaker.A else Speaker.A


class TranscriptParseError(ValueError):
    """A transcript line is not a valid record."""

    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


class ValidationError(ValueError):
    """A session violates one of the dialog invariants."""


@dataclass(frozen=True)
class Word:
    text: str
    start: float
    end: float
    speaker: Speaker

    def __post_init__(self):
        if not (self.start >= 0 and self.end > self.start):
            raise ValidationError(f"word {self.text!r} ({self.speaker.value}) has invalid interval [{self.start}, {self.end}]")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class DialogActSegment:
    label: str
    start: float
    end: float
    speaker: Speaker
    word_span: tuple[int, int]  # half-open [first, last + 1) into the speaker's words

    def __post_init__(self):
        if self.end <= self.start:
            raise ValidationError(f"dialog act {self.label!r} ({self.speaker.value}) has invalid interval [{self.start}, {self.end}]")
        if self.word_span[1] <= self.word_span[0]:
            raise ValidationError(f"dialog act {self.label!r} at {self.start}s covers no words")


@dataclass(frozen=True)
class AudioRef:
    """Location of the session audio.

    ``paths`` holds either one stereo file (``channel_map == (0, 1)``) or two
    mono files, one per speaker, in speaker order A, B.
    """

    paths: tuple[str, ...]
    sample_rate: int
    channels: int
    channel_map: tuple[int, int] = (0, 1)

    def load(self) -> np.ndarray:
        """Return a ``(n_samples, 2)`` float array with speaker A in column 0."""
        if len(self.paths) == 1:
            data, rate = _audio.read_wav(self.paths[0])
            if rate != self.sample_rate:
                raise ValidationError(f"{self.paths[0]}: sample rate {rate} != manifest {self.sample_rate}")
            if data.shape[1] != 2:
                raise ValidationError(f"{self.paths[0]}: expected 2 channels, got {data.shape[1]}")
            return data[:, list(self.channel_map)]
        cols = []
        for p in self.paths:
            data, rate = _audio.read_wav(p)
            if rate != self.sample_rate:
                raise ValidationError(f"{p}: sample rate {rate} != manifest {self.sample_rate}")
            cols.append(data[:, 0])
        if len(cols[0]) != len(cols[1]):
            raise ValidationError(f"mono channel files differ in length: {len(cols[0])} vs {len(cols[1])}")
        return np.stack(cols, axis=1)


@dataclass(frozen=True)
class Session:
    id: str
    words: Mapping[Speaker, tuple[Word, ...]]
    dialog_acts: Mapping[Speaker, tuple[DialogActSegment, ...]]
    duration: float
    audio: AudioRef | None = None

    def __post_init__(self):
        for spk in Speaker:
            ws = self.words.get(spk, ())
            for i, w in enumerate(ws):
                if w.speaker is not spk:
                    raise ValidationError(f"word {i} filed under speaker {spk.value} belongs to {w.speaker.value}")
                if w.end > self.duration + 1e-9:
                    raise ValidationError(f"word {i} ({spk.value}, {w.text!r}) ends after session end {self.duration}")
                if i and ws[i - 1].end > w.start:
                    raise ValidationError(
                        f"words {i - 1} and {i} of speaker {spk.value} overlap or are unsorted "
                        f"({ws[i - 1].text!r} ends {ws[i - 1].end}, {w.text!r} starts {w.start})"
                    )
            for j, da in enumerate(self.dialog_acts.get(spk, ())):
                if da.end > self.duration + 1e-9:
                    raise ValidationError(f"dialog act {j} ({spk.value}) ends after session end")
                if da.word_span[1] > len(ws):
                    raise ValidationError(f"dialog act {j} ({spk.value}) word span out of range")

    def speaker_words(self, speaker: Speaker) -> tuple[Word, ...]:
        return self.words.get(speaker, ())

    def speaker_acts(self, speaker: Speaker) -> tuple[DialogActSegment, ...]:
        return self.dialog_acts.get(speaker, ())

    def load_audio(self) -> np.ndarray:
        if self.audio is None:
            raise ValidationError(f"session {self.id} has no audio reference")
        return self.audio.load()


@dataclass(frozen=True)
class ActivityTimeline:
    frame_rate: float
    frames: Mapping[Speaker, np.ndarray] = field(repr=False)

    @property
    def n_frames(self) -> int:
        return len(self.frames[Speaker.A])

    def active_seconds(self, speaker: Speaker) -> float:
        return float(np.count_nonzero(self.frames[speaker])) / self.frame_rate


def _num(rec, key, path, lineno) -> float:
    v = rec.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise TranscriptParseError(path, lineno, f"field {key!r} must be a finite number")
    return float(v)


def span_words(words: Sequence[Word], start: float, end: float) -> tuple[int, int]:
    """Half-open index range of the words whose midpoint lies in ``[start, end]``."""
    idx = [i for i, w in enumerate(words) if start <= 0.5 * (w.start + w.end) <= end]
    if not idx:
        return (0, 0)
    return (idx[0], idx[-1] + 1)


def build_session(
    session_id: str,
    words: Sequence[Word],
    acts: Sequence[tuple[str, float, float, Speaker]],
    duration: float | None = None,
    audio: AudioRef | None = None,
) -> Session:
    """Assemble a validated :class:`Session` from flat word and act lists.

    Dialog-act word spans are derived from word midpoints.
    """
    by_spk = {s: sorted((w for w in words if w.speaker is s), key=lambda w: w.start) for s in Speaker}
    da_by_spk: dict[Speaker, list[DialogActSegment]] = {s: [] for s in Speaker}
    for label, start, end, spk in sorted(acts, key=lambda a: (a[3].value, a[1])):
        span = span_words(by_spk[spk], start, end)
        if span[1] <= span[0]:
            raise ValidationError(f"dialog act {label!r} ({spk.value}) at [{start}, {end}] covers no words")
        ws = by_spk[spk]
        mismatch = max(abs(ws[span[0]].start - start), abs(ws[span[1] - 1].end - end))
        if mismatch > DA_MISMATCH_WARN:
            logger.warning("%s: dialog act %r (%s) at %.3fs disagrees with word timing by %.3fs",
                           session_id, label, spk.value, start, mismatch)
        da_by_spk[spk].append(DialogActSegment(label, start, end, spk, span))
    if duration is None:
        ends = [w.end for w in words] + [a[2] for a in acts]
        duration = max(ends, default=0.0)
    return Session(
        id=session_id,
        words={s: tuple(v) for s, v in by_spk.items()},
        dialog_acts={s: tuple(v) for s, v in da_by_spk.items()},
        duration=float(duration),
        audio=audio,
    )


def read_transcript(path: str | Path) -> tuple[list[Word], list[tuple[str, float, float, Speaker]]]:
    """Parse a JSONL transcript into words and raw dialog-act tuples."""
    words: list[Word] = []
    acts: list[tuple[str, float, float, Speaker]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TranscriptParseError(path, lineno, f"invalid JSON: {exc.msg}") from None
            if not isinstance(rec, dict):
                raise TranscriptParseError(path, lineno, "record must be a JSON object")
            kind = rec.get("type")
            try:
                spk = Speaker(rec.get("speaker"))
            except ValueError:
                raise TranscriptParseError(path, lineno, f"speaker must be 'A' or 'B', got {rec.get('speaker')!r}") from None
            start, end = _num(rec, "start", path, lineno), _num(rec, "end", path, lineno)
            if kind == "word":
                text = rec.get("text")
                if not isinstance(text, str) or not text:
                    raise TranscriptParseError(path, lineno, "word record needs non-empty 'text'")
                try:
                    words.append(Word(text.lower(), start, end, spk))
                except ValidationError as exc:
                    raise ValidationError(f"{path}:{lineno}: {exc}") from None
            elif kind == "da":
                label = rec.get("label")
                if not isinstance(label, str) or not label:
                    raise TranscriptParseError(path, lineno, "da record needs non-empty 'label'")
                if end <= start:
                    raise ValidationError(f"{path}:{lineno}: dialog act {label!r} has end <= start")
                acts.append((label, start, end, spk))
            else:
                raise TranscriptParseError(path, lineno, f"unknown record type {kind!r}")
    return words, acts


def read_audio_manifest(path: str | Path) -> tuple[str, AudioRef, float]:
    """Parse an audio manifest; returns ``(session_id, audio_ref, duration)``."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        man = json.load(fh)
    base = path.parent
    chans = {c["speaker"]: c for c in man["channels"]}
    if set(chans) != {"A", "B"}:
        raise ValidationError(f"{path}: manifest must list channels for speakers A and B")
    rate = int(man["sample_rate"])
    pa, pb = (str(base / chans[s]["path"]) for s in ("A", "B"))
    if pa == pb:
        ref = AudioRef((pa,), rate, 2, (int(chans["A"].get("channel", 0)), int(chans["B"].get("channel", 1))))
        n, r, c = _audio.wav_info(pa)
        if c != 2:
            raise ValidationError(f"{pa}: shared channel file must be stereo")
    else:
        ref = AudioRef((pa, pb), rate, 1)
        n, r, _ = _audio.wav_info(pa)
        nb, rb, _ = _audio.wav_info(pb)
        if (n, r) != (nb, rb):
            raise ValidationError(f"{path}: mono files differ in length or sample rate")
    if r != rate:
        raise ValidationError(f"{path}: WAV sample rate {r} != manifest {rate}")
    return str(man["session"]), ref, n / rate


def load_session(transcript_path: str | Path, audio_manifest: str | Path | None = None,
                 session_id: str | None = None) -> Session:
    """Load and validate a session from a transcript and optional audio manifest."""
    words, acts = read_transcript(transcript_path)
    audio_ref = None
    duration = None
    if audio_manifest is not None:
        sid, audio_ref, duration = read_audio_manifest(audio_manifest)
        session_id = session_id or sid
    if session_id is None:
        session_id = Path(transcript_path).stem
    return build_session(session_id, words, acts, duration, audio_ref)


def _fmt(x: float) -> str:
    return repr(float(x))


def transcript_lines(session: Session) -> list[str]:
    """Canonical JSONL lines: words (A then B, by start) followed by dialog acts."""
    lines = []
    for spk in Speaker:
        for w in session.speaker_words(spk):
            lines.append('{"type":"word","speaker":%s,"text":%s,"start":%s,"end":%s}'
                         % (json.dumps(spk.value), json.dumps(w.text), _fmt(w.start), _fmt(w.end)))
    for spk in Speaker:
        for da in session.speaker_acts(spk):
            lines.append('{"type":"da","speaker":%s,"label":%s,"start":%s,"end":%s}'
                         % (json.dumps(spk.value), json.dumps(da.label), _fmt(da.start), _fmt(da.end)))
    return lines


def save_transcript(session: Session, path: str | Path) -> None:
    Path(path).write_text("".join(line + "\n" for line in transcript_lines(session)), encoding="utf-8")


def voice_activity(session: Session, frame_rate: float = 50.0) -> ActivityTimeline:
    """Binary per-frame voice activity from word timings.

    Frame ``f`` covers ``[f / rate, (f + 1) / rate)`` and is active when any
    word of the speaker overlaps it.
    """
    if frame_rate <= 0:
        raise ValueError("frame_rate must be positive")
    n = math.ceil(round(session.duration * frame_rate, 9))
    out = {}
    for spk in Speaker:
        act = np.zeros(n, dtype=bool)
        for w in session.speaker_words(spk):
            lo = math.floor(round(w.start * frame_rate, 9))
            hi = math.ceil(round(w.end * frame_rate, 9))
            act[max(lo, 0):min(hi, n)] = True
        act.setflags(write=False)
        out[spk] = act
    return ActivityTimeline(frame_rate, out)
