"""PCM-16 WAV reading and writing.

Waveforms are handled as float64 arrays of shape ``(n_samples, n_channels)``
scaled to [-1, 1).
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

_SCALE = 32768.0


class AudioFormatError(ValueError):
    """Raised for WAV files that are not 16-bit integer PCM."""


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a 16-bit PCM WAV file.

    Returns
    -------
    samples : ndarray, shape (n_samples, n_channels)
    sample_rate : int
    """
    with wave.open(str(path), "rb") as w:
        if w.getsampwidth() != 2:
            raise AudioFormatError(f"{path}: only 16-bit PCM is supported (got {8 * w.getsampwidth()} bit)")
        channels = w.getnchannels()
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    data = np.frombuffer(raw, dtype="<i2").reshape(-1, channels)
    return data.astype(np.float64) / _SCALE, rate


def wav_info(path: str | Path) -> tuple[int, int, int]:
    """Return ``(n_frames, sample_rate, channels)`` without decoding samples."""
    with wave.open(str(path), "rb") as w:
        if w.getsampwidth() != 2:
            raise AudioFormatError(f"{path}: only 16-bit PCM is supported")
        return w.getnframes(), w.getframerate(), w.getnchannels()


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    """Quantize float samples to int16 with clipping."""
    q = np.round(np.asarray(samples, dtype=np.float64) * _SCALE)
    return np.clip(q, -32768, 32767).astype("<i2")


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float samples (1-D mono or 2-D ``(n, channels)``) as PCM-16."""
    samples = np.asarray(samples)
    if samples.ndim == 1:
        samples = samples[:, None]
    pcm = to_pcm16(samples)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(pcm.shape[1])
        w.setsampwidth(2)
        w.setframerate(int(sample_rate))
        w.writeframes(pcm.tobytes())


def linear_ramp(n: int) -> np.ndarray:
    """Fade-in gain ramp of ``n`` samples, excluding both endpoints 0 and 1."""
    return (np.arange(n, dtype=np.float64) + 1.0) / (n + 1.0)
