import numpy as np
import pytest

from fillerhold.dialog import AudioRef, Speaker, Word, build_session
from fillerhold.synth import SynthConfig, generate_corpus

A, B = Speaker.A, Speaker.B


def make_session(words, acts=(), sid="t0", duration=None, sample_rate=None):
    """Session from ``(speaker, text, start, end)`` tuples and ``(label, start, end, speaker)`` acts."""
    ws = [Word(text, start, end, spk) for spk, text, start, end in words]
    ref = AudioRef(("unused.wav",), sample_rate, 2) if sample_rate else None
    return build_session(sid, ws, list(acts), duration=duration, audio=ref)


def filler_session(filler=("um", 24.0, 24.5), pause_word_at=25.0, listener=(), duration=40.0):
    """Speaker A talks up to a filler; optional listener words at given intervals."""
    words = [(A, "so", 21.0, 21.4), (A, "well", 21.5, 21.9), (A, filler[0], filler[1], filler[2]),
             (A, "yes", pause_word_at, pause_word_at + 0.3)]
    words += [(B, "yeah", lo, hi) for lo, hi in listener]
    acts = [("sd", 21.0, 21.9, A), ("sd", filler[1], pause_word_at + 0.3, A)]
    return make_session(words, acts, duration=duration, sample_rate=8000)


@pytest.fixture(scope="session")
def small_synth():
    return generate_corpus(SynthConfig(n_sessions=3, seed=7))


@pytest.fixture(scope="session")
def default_synth():
    return generate_corpus(SynthConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report: (label, passed, detail), filled by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0].split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
