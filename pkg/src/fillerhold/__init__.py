"""Filled pauses as turn-holding cues.

Stimulus manipulation around fillers (*uh*, *um*), turn-hold probability from
voice-activity projection label distributions, turn-shift timing over
artificial silence, and the survival analysis used to compare conditions.
"""

__version__ = "0.1.0"
