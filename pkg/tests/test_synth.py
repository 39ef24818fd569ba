import hashlib
import json

import numpy as np

from fillerhold.corpus import load_corpus
from fillerhold.predictor import PredictorSpec
from fillerhold.stimulus import find_fillers, find_ynq_utterances
from fillerhold.synth import SynthConfig, generate_corpus, write_corpus


def _digest(path):
    h = hashlib.sha256()
    for p in sorted(path.iterdir()):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def test_byte_identical(tmp_path):
    cfg = SynthConfig(n_sessions=2, seed=42)
    write_corpus(generate_corpus(cfg), tmp_path / "a")
    write_corpus(generate_corpus(cfg), tmp_path / "b")
    assert _digest(tmp_path / "a") == _digest(tmp_path / "b")
    write_corpus(generate_corpus(SynthConfig(n_sessions=2, seed=43)), tmp_path / "c")
    assert _digest(tmp_path / "a") != _digest(tmp_path / "c")


def test_ledger_matches_candidates(small_synth):
    ledger = small_synth.ledger()
    corpus = small_synth.corpus()
    found = {(f.session_id, f.speaker.value, f.word_index) for s in corpus for f in find_fillers(s)}
    planted = {(s["id"], f["speaker"], f["word_index"]) for s in ledger["sessions"] for f in s["fillers"]
               if f["problem"] is None}
    invalid = {(s["id"], f["speaker"], f["word_index"]) for s in ledger["sessions"] for f in s["fillers"]
               if f["problem"] is not None}
    assert found == planted
    assert ledger["counts"]["valid_fillers"] == len(found)
    assert not found & invalid


def test_invalid_durations_never_selected(small_synth):
    corpus = small_synth.corpus()
    short = [f for s in small_synth.ledger()["sessions"] for f in s["fillers"] if f["problem"] == "duration"]
    assert short and all(abs(f["duration"] - 0.15) < 1e-9 for f in short)
    assert all(f.duration > 0.2 for s in corpus for f in find_fillers(s))


def test_ledger_matches_questions(small_synth):
    corpus = small_synth.corpus()
    found = {(q.session_id, q.speaker.value, q.da_index) for s in corpus
             for q in find_ynq_utterances(s, PredictorSpec(), audio=corpus.audio(s.id))}
    planted = {(s["id"], q["speaker"], q["da_index"]) for s in small_synth.ledger()["sessions"]
               for q in s["questions"] if q["problem"] is None}
    assert found == planted


def test_trailing_listener_removes_questions():
    synth = generate_corpus(SynthConfig(n_sessions=2, ynq_trailing_listener=True))
    corpus = synth.corpus()
    assert all(find_ynq_utterances(s, PredictorSpec(), audio=corpus.audio(s.id)) == [] for s in corpus)


def test_written_corpus_loads(tmp_path, small_synth):
    write_corpus(small_synth, tmp_path)
    corpus = load_corpus(tmp_path)
    mem = small_synth.corpus()
    assert [s.id for s in corpus] == [s.id for s in mem]
    for s in corpus:
        assert s.words == mem.session(s.id).words
        np.testing.assert_array_equal(corpus.audio(s.id), mem.audio(s.id))
    ledger = json.loads((tmp_path / "ledger.json").read_text())
    assert ledger["counts"] == small_synth.ledger()["counts"]
    # directory scan without the index gives the same sessions
    (tmp_path / "corpus.json").unlink()
    assert [s.id for s in load_corpus(tmp_path)] == [s.id for s in mem]


def test_fillers_are_voiced_low_energy(small_synth):
    s = small_synth.sessions[0]
    sr = small_synth.config.sample_rate
    f = next(f for f in s.fillers if f["problem"] is None)
    ch = 0 if f["speaker"] == "A" else 1
    seg = s.audio[int(f["start"] * sr):int(f["end"] * sr), ch]
    assert 0.01 < np.sqrt(np.mean(seg ** 2)) < 0.2
