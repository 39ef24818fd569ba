"""Exclusion and insertion experiments on a synthetic corpus.

The synthetic predictor plants a known hold bonus for stimuli that end in a
filler, so the two experiments should recover it.  It is not a model of real
turn-taking.

Run with ``python3 demos/03_synthetic_experiments.py``.
"""

from fillerhold.config import load_config
from fillerhold.experiments import report_markdown, run_exp1, run_exp2
from fillerhold.synth import SynthConfig, generate_corpus

corpus = generate_corpus(SynthConfig(n_sessions=6)).corpus()

cfg = load_config(None, [])
exp1 = run_exp1(corpus, cfg)
print(report_markdown(exp1, cfg))

# Remove the planted bonus: the two conditions should look alike.
null = run_exp1(corpus, load_config(None, ["predictor.synthetic.filler_hold_bonus=0"]))
print(f"without a planted bonus: log-rank p = {null.logrank.p:.3f}")

exp2 = run_exp2(corpus, cfg)
print(f"\ninsertion after yes/no questions: {exp2.counts}")
print(f"log-rank p = {exp2.logrank.p:.3g}")
