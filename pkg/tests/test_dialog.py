import json
import logging

import numpy as np
import pytest

from conftest import A, B, make_session
from fillerhold.audio import write_wav
from fillerhold.dialog import (Speaker, TranscriptParseError, ValidationError, Word, load_session,
                               read_audio_manifest, read_transcript, save_transcript, span_words,
                               voice_activity)


def _jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return path


def test_speaker_helpers():
    assert A.ordinal == 0 and B.ordinal == 1
    assert A.other is B and B.other is A


def test_word_validation():
    with pytest.raises(ValidationError):
        Word("uh", 1.0, 1.0, A)
    with pytest.raises(ValidationError):
        Word("uh", -0.1, 1.0, A)


def test_overlapping_words_rejected():
    with pytest.raises(ValidationError, match="overlap"):
        make_session([(A, "a", 0.0, 1.0), (A, "b", 0.5, 1.5)])


def test_word_after_end_rejected():
    with pytest.raises(ValidationError, match="after session end"):
        make_session([(A, "a", 0.0, 1.0)], duration=0.5)


def test_span_words_by_midpoint():
    ws = [Word("a", 0, 1, A), Word("b", 1, 2, A), Word("c", 2, 3, A)]
    assert span_words(ws, 0.4, 1.6) == (0, 2)
    assert span_words(ws, 3.0, 4.0) == (0, 0)


def test_build_session_spans_and_mismatch_warning(caplog):
    words = [(A, "a", 0.0, 0.5), (A, "b", 0.6, 1.0), (B, "c", 2.0, 2.5)]
    with caplog.at_level(logging.WARNING):
        s = make_session(words, [("sd", 0.0, 1.0, A), ("sd", 1.0, 3.2, B)])
    assert s.speaker_acts(A)[0].word_span == (0, 2)
    assert "disagrees" in caplog.text


def test_act_without_words_rejected():
    with pytest.raises(ValidationError, match="covers no words"):
        make_session([(A, "a", 0.0, 0.5)], [("sd", 5.0, 6.0, A)])


def test_transcript_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text('{"type":"word","speaker":"A","text":"hi","start":0,"end":1}\nnot json\n')
    with pytest.raises(TranscriptParseError) as err:
        read_transcript(p)
    assert ":2:" in str(err.value)
    _jsonl(p, [{"type": "word", "speaker": "C", "text": "x", "start": 0, "end": 1}])
    with pytest.raises(TranscriptParseError, match="speaker"):
        read_transcript(p)
    _jsonl(p, [{"type": "pause", "speaker": "A", "start": 0, "end": 1}])
    with pytest.raises(TranscriptParseError, match="unknown record type"):
        read_transcript(p)


def test_roundtrip_transcript(tmp_path):
    s = make_session([(A, "uh", 0.1, 0.35), (B, "yeah", 1.0, 1.3), (A, "so", 2.0, 2.25)],
                     [("sd", 0.1, 2.25, A), ("b", 1.0, 1.3, B)], sid="x")
    p = tmp_path / "x.jsonl"
    save_transcript(s, p)
    s2 = load_session(p)
    assert s2.words == s.words and s2.dialog_acts == s.dialog_acts
    save_transcript(s2, tmp_path / "y.jsonl")
    assert p.read_bytes() == (tmp_path / "y.jsonl").read_bytes()


def test_audio_manifest_stereo_and_mono(tmp_path):
    sr = 8000
    x = np.zeros((sr, 2))
    x[:, 0] = 0.25
    x[:, 1] = -0.5
    write_wav(tmp_path / "st.wav", x, sr)
    man = {"session": "s1", "sample_rate": sr, "channels": [{"speaker": "A", "path": "st.wav", "channel": 1},
                                                              {"speaker": "B", "path": "st.wav", "channel": 0}]}
    (tmp_path / "m.json").write_text(json.dumps(man))
    sid, ref, dur = read_audio_manifest(tmp_path / "m.json")
    assert sid == "s1" and dur == 1.0
    audio = ref.load()
    np.testing.assert_allclose(audio[0], [-0.5, 0.25])

    write_wav(tmp_path / "a.wav", x[:, :1], sr)
    write_wav(tmp_path / "b.wav", x[:, 1:], sr)
    man = {"session": "s1", "sample_rate": sr, "channels": [{"speaker": "A", "path": "a.wav"},
                                                              {"speaker": "B", "path": "b.wav"}]}
    (tmp_path / "m2.json").write_text(json.dumps(man))
    _, ref, _ = read_audio_manifest(tmp_path / "m2.json")
    np.testing.assert_allclose(ref.load()[0], [0.25, -0.5])

    man["sample_rate"] = 16000
    (tmp_path / "m3.json").write_text(json.dumps(man))
    with pytest.raises(ValidationError, match="sample rate"):
        read_audio_manifest(tmp_path / "m3.json")


def test_voice_activity_frames():
    s = make_session([(A, "a", 0.0, 0.05), (B, "b", 0.03, 0.1)], duration=0.2)
    va = voice_activity(s, frame_rate=50)
    assert va.n_frames == 10
    assert list(np.flatnonzero(va.frames[A])) == [0, 1, 2]
    assert list(np.flatnonzero(va.frames[B])) == [1, 2, 3, 4]
    assert va.active_seconds(A) == pytest.approx(0.06)
    with pytest.raises(ValueError):
        va.frames[A][0] = False


def test_voice_activity_exact_boundaries():
    s = make_session([(A, "a", 0.2, 0.4)], duration=1.0)
    act = voice_activity(s, 50).frames[Speaker.A]
    assert list(np.flatnonzero(act)) == list(range(10, 20))
