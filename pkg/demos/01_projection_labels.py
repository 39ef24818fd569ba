"""Projection labels and turn-hold probability.

Run with ``python3 demos/01_projection_labels.py``.
"""

import numpy as np

from fillerhold.dialog import Speaker
from fillerhold.vap import DEFAULT_LAYOUT, decode_label, encode_label, swap_speakers, thp, thp_stream

A, B = Speaker.A, Speaker.B

# A label packs 4 future bins for each speaker into one byte, speaker A in the low nibble.
bits = decode_label(15)
print("label 15 ->\n", bits)
print("round trip:", encode_label(bits))
print("bin widths:", DEFAULT_LAYOUT.widths)

# Point masses: A active in every bin, B active in every bin, nobody active.
for label in (15, 240, 0):
    p = np.zeros(256)
    p[label] = 1.0
    print(f"THP_A(point mass on {label:3d}) = {thp(p, A)}")

# Mixed case. Only the first two bins (0.6 s) count, weighted by their width.
p = np.zeros(256)
p[15], p[240] = 0.75, 0.25
print("THP_A(0.75 on label 15, 0.25 on label 240) =", thp(p, A))

# Swapping the speaker nibbles mirrors the hold probability.
rng = np.random.default_rng(0)
q = rng.dirichlet(np.ones(256))
print("THP_A(q) + THP_A(swap(q)) =", thp(q, A) + thp(swap_speakers(q), A))

# A stream of frames becomes a THP series at 50 frames per second.
frames = rng.dirichlet(np.ones(256), size=5)
series = thp_stream(frames, A)
print("series times:", series.times)
print("series values:", np.round(series.values, 3))
