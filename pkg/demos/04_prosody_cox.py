"""Filler prosody and the Cox model of hold time.

Run with ``python3 demos/04_prosody_cox.py``.
"""

import numpy as np

from fillerhold.config import load_config
from fillerhold.experiments import run_exp3
from fillerhold.prosody import estimate_f0, mean_intensity
from fillerhold.survival import format_cox_table
from fillerhold.synth import SynthConfig, generate_corpus

# F0 and intensity of a plain 140 Hz tone.
sr = 16000
t = np.arange(int(0.3 * sr)) / sr
tone = 0.3 * np.sin(2 * np.pi * 140 * t)
f0 = estimate_f0(tone, sr)  # semitones re 1 Hz
print(f"estimated F0 {f0:.2f} semitones = {2 ** (f0 / 12):.1f} Hz; "
      f"intensity {mean_intensity(tone, sr):.1f} dB")

# The predictor here makes longer fillers hold the turn longer, so the
# Duration coefficient should come out negative (a lower hazard of a shift).
corpus = generate_corpus(SynthConfig(n_sessions=10)).corpus()
cfg = load_config(None, ["predictor.synthetic.duration_effect=1.0"])
report = run_exp3(corpus, cfg)
print(report.counts)
print(format_cox_table(report.cox))
