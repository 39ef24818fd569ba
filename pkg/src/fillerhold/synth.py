"""Synthetic two-speaker corpus with planted fillers and yes/no questions.

Words are rendered as short harmonic tones with a little noise on the
speaker's own channel; fillers are steady, quieter voiced tones.  Every
planted filler and question is recorded in a ground-truth ledger together
with whether it should pass the selection criteria, and why not.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import audio as _audio
from .corpus import Corpus
from .dialog import AudioRef, Session, Speaker, Word, build_session, save_transcript

VOCAB = ("so", "we", "went", "there", "and", "it", "was", "really", "nice", "i", "think", "that", "you",
         "know", "they", "have", "like", "a", "lot", "of", "people", "this", "kind", "thing", "well",
         "right", "just", "go", "to", "the", "store", "every", "week", "but", "not", "much")
QUESTION_VOCAB = ("do", "you", "have", "any", "kids", "did", "ever", "go", "there", "is", "it", "cold", "now")
ANSWER_VOCAB = ("yeah", "no", "we", "do", "not", "really", "sure")
INVALID_FILLER_KINDS = ("duration", "isolation", "pause")
INVALID_YNQ_KINDS = ("pause", "isolation")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_sessions: int = 20
    fillers_per_session: int = 10
    invalid_fillers_per_session: int = 3
    ynq_per_session: int = 2
    invalid_ynq_per_session: int = 1
    sample_rate: int = 8000
    warmup: float = 22.0
    filler_min: float = 0.25
    filler_max: float = 1.0
    um_fraction: float = 0.5
    start_fraction: float = 0.5
    ynq_trailing_listener: bool = False  # every question is answered too early to be valid
    noise_floor: float = 2e-4


class _Builder:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.words: dict[Speaker, list[Word]] = {Speaker.A: [], Speaker.B: []}
        self.acts: list[tuple[str, float, float, Speaker]] = []
        self.n_acts = {Speaker.A: 0, Speaker.B: 0}
        self.fillers: list[dict] = []
        self.questions: list[dict] = []
        self.voice: list[tuple[Speaker, float, float, str, dict]] = []
        self.base_f0 = {Speaker.A: float(rng.uniform(95, 140)), Speaker.B: float(rng.uniform(165, 230))}

    def word(self, spk: Speaker, text: str, start: float, dur: float | None = None, kind: str = "word", **attrs) -> Word:
        if dur is None:
            dur = float(self.rng.uniform(0.15, 0.45))
        w = Word(text, round(start, 4), round(start + dur, 4), spk)
        prev = self.words[spk][-1] if self.words[spk] else None
        assert prev is None or prev.end <= w.start, (prev, w)
        self.words[spk].append(w)
        self.voice.append((spk, w.start, w.end, kind, attrs))
        return w

    def run(self, spk: Speaker, start: float, n: int, vocab=VOCAB) -> list[Word]:
        out = []
        t = start
        for _ in range(n):
            w = self.word(spk, str(self.rng.choice(vocab)), t)
            out.append(w)
            t = w.end + float(self.rng.uniform(0.02, 0.1))
        return out

    def act(self, label: str, spk: Speaker, words: list[Word]) -> int:
        self.acts.append((label, words[0].start, words[-1].end, spk))
        self.n_acts[spk] += 1
        return self.n_acts[spk] - 1

    def turn(self, spk: Speaker, start: float, n: int | None = None) -> float:
        n = n if n is not None else int(self.rng.integers(3, 8))
        ws = self.run(spk, start, n)
        self.act("sd", spk, ws)
        return ws[-1].end

    # -- planted items -------------------------------------------------
    def filler_item(self, spk: Speaker, t0: float, problem: str | None, cfg: SynthConfig) -> float:
        rng = self.rng
        lis = spk.other
        lead = self.run(spk, t0 + float(rng.uniform(0.2, 0.5)), int(rng.integers(3, 7)))
        f_start = max(lead[-1].end + 0.05, t0 + 1.3)
        if problem == "isolation":
            # listener backchannel ending 0.4 s before the filler
            bc_end = f_start - 0.4
            bc_start = max(bc_end - 0.25, t0 + 0.05)
            if bc_start < bc_end - 0.05:
                self.word(lis, "yeah", bc_start, bc_end - bc_start)
            else:
                f_start = t0 + 0.75
                self.word(lis, "yeah", t0 + 0.1, 0.25)
        dur = 0.15 if problem == "duration" else float(rng.uniform(cfg.filler_min, cfg.filler_max))
        lex = "um" if rng.random() < cfg.um_fraction else "uh"
        position = "start" if rng.random() < cfg.start_fraction else "mid"
        base_f0 = self.base_f0[spk]
        f0 = base_f0 * 2 ** (float(rng.uniform(-3, 3)) / 12)
        amp = float(rng.uniform(0.06, 0.18))
        word_index = len(self.words[spk])
        fw = self.word(spk, lex, f_start, dur, kind="filler", f0=f0, amp=amp)
        pause = 0.1 if problem == "pause" else float(rng.uniform(0.3, 0.7))
        cont = self.run(spk, fw.end + pause, int(rng.integers(2, 5)))
        if position == "start":
            self.act("sd", spk, lead)
            self.act("sd", spk, [fw] + cont)
        else:
            self.act("sd", spk, lead + [fw] + cont)
        self.fillers.append({"speaker": spk.value, "word_index": word_index, "lexical_form": lex,
                             "start": fw.start, "end": fw.end, "duration": fw.end - fw.start,
                             "position": position, "f0_hz": f0, "amplitude": amp, "problem": problem})
        return max(cont[-1].end, fw.end + 1.3)

    def ynq_item(self, spk: Speaker, t0: float, problem: str | None) -> float:
        rng = self.rng
        lis = spk.other
        q = self.run(spk, t0 + float(rng.uniform(0.25, 0.5)), int(rng.integers(4, 8)), QUESTION_VOCAB)
        if q[-1].end - t0 < 0.8:
            # keep the listener's previous turn well clear of the question end
            extra = self.word(spk, "there", q[-1].end + 0.05, 0.8 - (q[-1].end - t0) + 0.1)
            q.append(extra)
        da_index = self.act("qy", spk, q)
        end = q[-1].end
        t = end
        if problem == "pause":
            cont = self.run(spk, end + 0.35, int(rng.integers(2, 4)))
            self.act("sd", spk, cont)
            t = cont[-1].end
            gap = float(rng.uniform(0.7, 1.2))
        elif problem == "isolation":
            gap = 0.3
        else:
            gap = float(rng.uniform(0.7, 1.2))
        ans = self.run(lis, t + gap, int(rng.integers(1, 4)), ANSWER_VOCAB)
        self.act("ny", lis, ans)
        self.questions.append({"speaker": spk.value, "da_index": da_index, "utterance_end": end, "problem": problem})
        return ans[-1].end


def _render(builder: _Builder, duration: float, cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    sr = cfg.sample_rate
    n = int(math.ceil(duration * sr))
    out = rng.standard_normal((n, 2), dtype=np.float32) * np.float32(cfg.noise_floor)
    for spk, start, end, kind, attrs in builder.voice:
        a, b = int(round(start * sr)), int(round(end * sr))
        t = np.arange(b - a) / sr
        if kind == "filler":
            f0, amp = attrs["f0"], attrs["amp"]
            phase = 2 * np.pi * f0 * t
            s1, c1 = np.sin(phase), np.cos(phase)
            sig = (s1 + 0.6 * s1 * c1) * (amp / 1.04)  # fundamental + 0.3 * second harmonic
            ramp = int(0.01 * sr)
        else:
            f0 = builder.base_f0[spk] * 2 ** (float(rng.uniform(-2, 2)) / 12)
            amp = float(rng.uniform(0.2, 0.4))
            phase = 2 * np.pi * f0 * t
            s1, c1 = np.sin(phase), np.cos(phase)
            # harmonics 1..3 at 1, 0.5, 0.25 via sin(2x) = 2 sin x cos x, sin(3x) = sin x (3 - 4 sin^2 x)
            sig = (s1 + s1 * c1 + 0.25 * s1 * (3 - 4 * s1 * s1)) * (amp / 1.3)
            sig += rng.standard_normal(len(t), dtype=np.float32) * np.float32(0.02)
            ramp = int(0.015 * sr)
        ramp = min(ramp, len(sig) // 2)
        if ramp:
            env = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
            sig[:ramp] *= env
            sig[-ramp:] *= env[::-1]
        out[a:b, spk.ordinal] += sig
    # quantize so in-memory audio equals what a PCM-16 round trip yields
    return _audio.to_pcm16(out).astype(np.float64) / 32768.0


@dataclass
class SynthSession:
    session: Session
    audio: np.ndarray
    fillers: list[dict]
    questions: list[dict]


def generate_session(session_id: str, cfg: SynthConfig, rng: np.random.Generator) -> SynthSession:
    b = _Builder(rng)
    first = Speaker.A if rng.random() < 0.5 else Speaker.B
    # opening filler lacks the required context and must never be selected
    t = b.filler_item(first, 0.2, "context", cfg)
    spk = first.other
    while t < cfg.warmup:
        t = b.turn(spk, t + float(rng.uniform(0.2, 0.6)))
        spk = spk.other

    items = ([("filler", None)] * cfg.fillers_per_session
             + [("filler", INVALID_FILLER_KINDS[i % len(INVALID_FILLER_KINDS)]) for i in range(cfg.invalid_fillers_per_session)]
             + [("ynq", "isolation" if cfg.ynq_trailing_listener else None)] * cfg.ynq_per_session
             + [("ynq", INVALID_YNQ_KINDS[i % len(INVALID_YNQ_KINDS)]) for i in range(cfg.invalid_ynq_per_session)])
    order = rng.permutation(len(items))
    for k, idx in enumerate(order):
        kind, problem = items[idx]
        item_spk = Speaker.A if k % 2 == 0 else Speaker.B
        # listener turn before each item, well separated from the item itself
        t = b.turn(item_spk.other, t + float(rng.uniform(0.3, 0.6)))
        if kind == "filler":
            t = b.filler_item(item_spk, t, problem, cfg)
        else:
            t = b.ynq_item(item_spk, t, problem)
    duration = round(t + 1.5, 4)
    words = [w for spk in Speaker for w in b.words[spk]]
    audio = _render(b, duration, cfg, rng)
    ref = AudioRef((f"{session_id}.wav",), cfg.sample_rate, 2)
    session = build_session(session_id, words, b.acts, duration=len(audio) / cfg.sample_rate, audio=ref)
    return SynthSession(session, audio, b.fillers, b.questions)


@dataclass
class SynthCorpus:
    config: SynthConfig
    sessions: list[SynthSession]

    def corpus(self) -> Corpus:
        return Corpus([s.session for s in self.sessions], {s.session.id: s.audio for s in self.sessions})

    def ledger(self) -> dict:
        sessions = []
        n_fill = n_q = n_ins = 0
        for s in self.sessions:
            valid_f = [f for f in s.fillers if f["problem"] is None]
            valid_q = [q for q in s.questions if q["problem"] is None]
            n_fill += len(valid_f)
            n_q += len(valid_q)
            n_ins += sum(1 for q in valid_q for f in valid_f if f["speaker"] == q["speaker"])
            sessions.append({"id": s.session.id, "fillers": s.fillers, "questions": s.questions})
        return {"config": asdict(self.config), "counts": {"valid_fillers": n_fill, "valid_questions": n_q,
                                                          "insertion_pairs": n_ins}, "sessions": sessions}


def generate_corpus(cfg: SynthConfig = SynthConfig()) -> SynthCorpus:
    rng = np.random.default_rng(cfg.seed)
    return SynthCorpus(cfg, [generate_session(f"s{i:03d}", cfg, rng) for i in range(cfg.n_sessions)])


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_corpus(synth: SynthCorpus, out_dir: str | Path) -> Path:
    """Write transcripts, stereo WAVs, manifests, ``corpus.json`` and ``ledger.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for s in synth.sessions:
        sid = s.session.id
        save_transcript(s.session, out / f"{sid}.jsonl")
        _audio.write_wav(out / f"{sid}.wav", s.audio, synth.config.sample_rate)
        manifest = {"session": sid, "sample_rate": synth.config.sample_rate,
                    "channels": [{"speaker": "A", "path": f"{sid}.wav", "channel": 0},
                                 {"speaker": "B", "path": f"{sid}.wav", "channel": 1}]}
        (out / f"{sid}.audio.json").write_text(_dumps(manifest), encoding="utf-8")
        index.append({"id": sid, "transcript": f"{sid}.jsonl", "manifest": f"{sid}.audio.json"})
    (out / "corpus.json").write_text(_dumps({"sessions": index}), encoding="utf-8")
    (out / "ledger.json").write_text(_dumps(synth.ledger()), encoding="utf-8")
    return out
