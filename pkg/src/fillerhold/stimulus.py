"""Filler and yes/no-question candidate selection, and paired stimuli.

Each stimulus is a stretch of dialog context followed by artificial silence.
Pairs differ only in whether a filler is present at the end of the context:
exclusion pairs silence an existing filler, insertion pairs splice a filler
onto the end of a yes/no question.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import audio as _audio
from .dialog import Session, Speaker, Word
from .predictor import PredictorError, predict, turn_shift_time

DEFAULT_SPELLINGS = {"uh": "uh", "um": "um", "uhm": "um", "umm": "um", "uhh": "uh"}
DEFAULT_YNQ_LABELS = ("qy",)
EPS = 1e-9  # absorbs float error in differences of transcript times


class StimulusError(ValueError):
    """A stimulus cannot be built from the given candidate."""


@dataclass(frozen=True)
class FillerCriteria:
    min_duration: float = 0.2
    min_pause_after: float = 0.2
    listener_isolation: float = 1.0
    min_context: float = 20.0
    spellings: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_SPELLINGS))


@dataclass(frozen=True)
class YnqCriteria:
    min_pause_after: float = 0.5
    listener_isolation: float = 0.5
    min_context: float = 20.0
    max_shift_time: float = 5.0
    labels: tuple[str, ...] = DEFAULT_YNQ_LABELS


@dataclass(frozen=True)
class StimulusLayout:
    context_len: float = 20.0
    silence_len: float = 10.0
    crossfade: float = 0.01
    max_insert_duration: float = 5.0


@dataclass(frozen=True)
class FillerCandidate:
    session_id: str
    speaker: Speaker
    word_index: int
    lexical_form: str
    start: float
    end: float
    position: str | None  # "start" / "mid" within the enclosing dialog act, None if no act covers it

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def id(self) -> str:
        return f"{self.session_id}-{self.speaker.value}w{self.word_index}"


@dataclass(frozen=True)
class YnqCandidate:
    session_id: str
    speaker: Speaker
    da_index: int
    utterance_end: float

    @property
    def id(self) -> str:
        return f"{self.session_id}-{self.speaker.value}q{self.da_index}"


@dataclass(frozen=True)
class Stimulus:
    id: str
    audio: np.ndarray = field(repr=False)  # (n_samples, 2), speaker A in column 0
    sample_rate: int
    silence_onset: float
    current_speaker: Speaker
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return len(self.audio) / self.sample_rate


@dataclass(frozen=True)
class StimulusPair:
    id: str
    treatment: Stimulus
    control: Stimulus
    context_len: float
    silence_len: float
    metadata: Mapping[str, Any] = field(default_factory=dict)


def _next_start(words: tuple[Word, ...], i: int, default: float) -> float:
    return words[i + 1].start if i + 1 < len(words) else default


def _listener_active(session: Session, listener: Speaker, lo: float, hi: float) -> bool:
    return any(w.end > lo and w.start < hi for w in session.speaker_words(listener))


def filler_position(session: Session, speaker: Speaker, word_index: int) -> str | None:
    for da in session.speaker_acts(speaker):
        if da.word_span[0] <= word_index < da.word_span[1]:
            return "start" if word_index == da.word_span[0] else "mid"
    return None


def check_filler(session: Session, speaker: Speaker, i: int, criteria: FillerCriteria = FillerCriteria()) -> str | None:
    """Return ``None`` if word ``i`` of ``speaker`` is a valid filler, else the failed criterion."""
    words = session.speaker_words(speaker)
    w = words[i]
    if w.text not in criteria.spellings:
        return "not a filler"
    if not w.duration > criteria.min_duration + EPS:
        return "duration"
    if _next_start(words, i, session.duration) - w.end < criteria.min_pause_after - EPS:
        return "pause"
    iso = criteria.listener_isolation
    if _listener_active(session, speaker.other, w.start - iso, w.end + iso):
        return "isolation"
    if w.end < criteria.min_context:
        return "context"
    return None


def find_fillers(session: Session, criteria: FillerCriteria = FillerCriteria()) -> list[FillerCandidate]:
    """All filler tokens in ``session`` that meet the selection criteria."""
    out = []
    for spk in Speaker:
        for i, w in enumerate(session.speaker_words(spk)):
            if check_filler(session, spk, i, criteria) is None:
                out.append(FillerCandidate(session.id, spk, i, criteria.spellings[w.text],
                                           w.start, w.end, filler_position(session, spk, i)))
    return out


def _utterance_final_acts(session: Session, speaker: Speaker) -> list[int]:
    """Indices of the speaker's acts that end an utterance.

    An utterance is a run of the speaker's dialog acts not interrupted by any
    word of the other speaker.
    """
    acts = session.speaker_acts(speaker)
    listener = session.speaker_words(speaker.other)
    out = []
    for j, da in enumerate(acts):
        if j + 1 < len(acts):
            nxt = acts[j + 1]
            if not any(w.start >= da.end and w.start < nxt.start for w in listener):
                continue
        out.append(j)
    return out


def check_ynq(session: Session, speaker: Speaker, j: int, criteria: YnqCriteria = YnqCriteria()) -> str | None:
    """Transcript-level checks for a yes/no-question candidate (no predictor)."""
    acts = session.speaker_acts(speaker)
    da = acts[j]
    if da.label not in criteria.labels:
        return "label"
    if j not in _utterance_final_acts(session, speaker):
        return "not utterance-final"
    words = session.speaker_words(speaker)
    last = da.word_span[1] - 1
    end = words[last].end
    if not _next_start(words, last, session.duration) - end > criteria.min_pause_after + EPS:
        return "pause"
    iso = criteria.listener_isolation
    if _listener_active(session, speaker.other, end - iso, end + iso):
        return "isolation"
    if end < criteria.min_context:
        return "context"
    return None


def ynq_end(session: Session, speaker: Speaker, j: int) -> float:
    da = session.speaker_acts(speaker)[j]
    return session.speaker_words(speaker)[da.word_span[1] - 1].end


def find_ynq_utterances(session: Session, predictor, criteria: YnqCriteria = YnqCriteria(),
                        audio: np.ndarray | None = None, layout: StimulusLayout = StimulusLayout(),
                        return_outcomes: bool = False):
    """Yes/no questions after which the predictor expects a quick turn shift.

    The final criterion runs ``predictor`` on the control stimulus; questions
    whose turn-shift time is censored or not below ``criteria.max_shift_time``
    are dropped.  With ``return_outcomes`` the control stimulus outcomes are
    returned alongside, as ``(candidate, outcome)`` tuples.
    """
    found = []
    for spk in Speaker:
        for j in range(len(session.speaker_acts(spk))):
            if check_ynq(session, spk, j, criteria) is not None:
                continue
            cand = YnqCandidate(session.id, spk, j, ynq_end(session, spk, j))
            if audio is None:
                audio = session.load_audio()
            stim = ynq_control(session, cand, audio, layout)
            try:
                series = predict(stim, predictor)
            except PredictorError as exc:
                raise PredictorError(f"{cand.id}: {exc}") from exc
            outcome = turn_shift_time(series, stim.silence_onset, horizon=layout.silence_len)
            if not outcome.censored and outcome.time < criteria.max_shift_time:
                found.append((cand, outcome))
    return found if return_outcomes else [c for c, _ in found]


def _sample_rate(session: Session) -> int:
    if session.audio is None:
        raise StimulusError(f"session {session.id} has no audio")
    return session.audio.sample_rate


def _context(audio: np.ndarray, end: float, sr: int, layout: StimulusLayout) -> tuple[np.ndarray, int]:
    n_ctx = int(round(layout.context_len * sr))
    s1 = int(round(end * sr))
    s0 = s1 - n_ctx
    if s0 < 0 or s1 > len(audio):
        raise StimulusError(f"need {layout.context_len}s of context before {end:.3f}s")
    return audio[s0:s1].copy(), s0


def _with_silence(ctx: np.ndarray, sr: int, layout: StimulusLayout) -> np.ndarray:
    return np.concatenate([ctx, np.zeros((int(round(layout.silence_len * sr)), ctx.shape[1]))])


def build_exclusion_pair(session: Session, filler: FillerCandidate, audio: np.ndarray | None = None,
                         layout: StimulusLayout = StimulusLayout(), mode: str = "silence") -> StimulusPair:
    """Pair the filler-final context with a copy where the filler is removed.

    ``mode="silence"`` zeroes the filler on its speaker's channel, keeping both
    samples aligned; ``mode="excise"`` instead takes the context window ending
    at the filler onset.
    """
    if audio is None:
        audio = session.load_audio()
    sr = _sample_rate(session)
    ctx, s0 = _context(audio, filler.end, sr, layout)
    treat = _with_silence(ctx, sr, layout)
    if mode == "silence":
        ctl = treat.copy()
        a = int(round(filler.start * sr)) - s0
        b = int(round(filler.end * sr)) - s0
        ctl[max(a, 0):b, filler.speaker.ordinal] = 0.0
    elif mode == "excise":
        ctl = _with_silence(_context(audio, filler.start, sr, layout)[0], sr, layout)
    else:
        raise ValueError(f"unknown exclusion mode {mode!r}")
    base = {"experiment": "exclusion", "session": session.id, "speaker": filler.speaker.value,
            "word_index": filler.word_index, "lexical_form": filler.lexical_form,
            "filler_start": filler.start, "filler_end": filler.end, "filler_duration": filler.duration,
            "position": filler.position, "ynq": False, "mode": mode}
    return StimulusPair(
        id=filler.id,
        treatment=Stimulus(filler.id + ".treatment", treat, sr, layout.context_len, filler.speaker,
                           {**base, "trailing_filler": True, "condition": "with_filler"}),
        control=Stimulus(filler.id + ".control", ctl, sr, layout.context_len, filler.speaker,
                         {**base, "trailing_filler": False, "condition": "without_filler"}),
        context_len=layout.context_len, silence_len=layout.silence_len, metadata=base,
    )


def ynq_control(session: Session, ynq: YnqCandidate, audio: np.ndarray,
                layout: StimulusLayout = StimulusLayout()) -> Stimulus:
    sr = _sample_rate(session)
    ctx, _ = _context(audio, ynq.utterance_end, sr, layout)
    meta = {"experiment": "insertion", "session": session.id, "speaker": ynq.speaker.value,
            "da_index": ynq.da_index, "utterance_end": ynq.utterance_end, "ynq": True,
            "trailing_filler": False, "condition": "without_filler"}
    return Stimulus(ynq.id + ".control", _with_silence(ctx, sr, layout), sr, layout.context_len, ynq.speaker, meta)


def build_insertion_pair(session: Session, ynq: YnqCandidate, filler: FillerCandidate,
                         audio: np.ndarray | None = None, layout: StimulusLayout = StimulusLayout()) -> StimulusPair:
    """Splice ``filler`` onto the end of the question ``ynq``.

    The filler samples are taken from the filler speaker's channel and placed
    on the question speaker's channel right at the utterance end, with linear
    fades of ``layout.crossfade`` seconds at both splice points.
    """
    if filler.speaker is not ynq.speaker or filler.session_id != ynq.session_id:
        raise StimulusError("filler must come from the question speaker in the same session")
    if filler.duration > layout.max_insert_duration:
        raise StimulusError(f"filler of {filler.duration:.2f}s is too long to splice")
    if audio is None:
        audio = session.load_audio()
    sr = _sample_rate(session)
    control = ynq_control(session, ynq, audio, layout)
    n_ctx = int(round(layout.context_len * sr))
    seg = audio[int(round(filler.start * sr)):int(round(filler.end * sr)), filler.speaker.ordinal].copy()
    ramp_n = min(int(round(layout.crossfade * sr)), len(seg) // 2)
    if ramp_n:
        ramp = _audio.linear_ramp(ramp_n)
        seg[:ramp_n] *= ramp
        seg[-ramp_n:] *= ramp[::-1]
    treat = np.zeros((len(control.audio) + len(seg), 2))
    treat[:n_ctx] = control.audio[:n_ctx]
    treat[n_ctx:n_ctx + len(seg), ynq.speaker.ordinal] = seg
    dur = len(seg) / sr
    pid = f"{ynq.id}-{filler.speaker.value}w{filler.word_index}"
    base = {"experiment": "insertion", "session": session.id, "speaker": ynq.speaker.value,
            "da_index": ynq.da_index, "utterance_end": ynq.utterance_end, "word_index": filler.word_index,
            "lexical_form": filler.lexical_form, "filler_duration": dur, "crossfade_samples": ramp_n, "ynq": True}
    return StimulusPair(
        id=pid,
        treatment=Stimulus(pid + ".treatment", treat, sr, layout.context_len + dur, ynq.speaker,
                           {**base, "trailing_filler": True, "condition": "with_filler"}),
        control=control,
        context_len=layout.context_len, silence_len=layout.silence_len, metadata=base,
    )


def manifest_record(pair: StimulusPair) -> dict:
    """One stimulus-manifest line for ``pair`` (WAV names relative to the manifest)."""
    return {
        "pair_id": pair.id,
        "treatment": {"wav": f"{pair.id}.treatment.wav", "condition": pair.treatment.metadata["condition"],
                      "silence_onset": pair.treatment.silence_onset},
        "control": {"wav": f"{pair.id}.control.wav", "condition": pair.control.metadata["condition"],
                    "silence_onset": pair.control.silence_onset},
        "current_speaker": pair.treatment.current_speaker.value,
        "sample_rate": pair.treatment.sample_rate,
        "metadata": dict(pair.metadata),
        "covariates": None,
    }


def write_stimulus_pair(pair: StimulusPair, out_dir: str | Path) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _audio.write_wav(out_dir / f"{pair.id}.treatment.wav", pair.treatment.audio, pair.treatment.sample_rate)
    _audio.write_wav(out_dir / f"{pair.id}.control.wav", pair.control.audio, pair.control.sample_rate)
    return manifest_record(pair)


def write_manifest(records, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def candidate_dict(c) -> dict:
    d = asdict(c)
    d["speaker"] = c.speaker.value
    d["id"] = c.id
    return d
