"""Kaplan-Meier, log-rank and Cox on small hand-made data.

Run with ``python3 demos/02_survival_engine.py``.
"""

import numpy as np

from fillerhold.survival import fit_cox, format_cox_table, hazard_interpretation, kaplan_meier, log_rank

# Five subjects: events at 1, 3 and 4; censored at 2 and 5.
km = kaplan_meier(time=[1, 2, 3, 4, 5], event=[1, 0, 1, 1, 0])
for s in km.steps:
    print(f"t={s.time:.0f}  S={s.survival:.4f}  at risk={s.at_risk}  events={s.events}")

# Two groups, one shifting the turn later than the other.
rng = np.random.default_rng(1)
t = np.r_[rng.exponential(1.0, 30), rng.exponential(2.5, 30)]
e = t < 4.0
t = np.minimum(t, 4.0)
g = ["short"] * 30 + ["long"] * 30
lr = log_rank(time=t, event=e, group=g)
print(f"\nlog-rank chi2 = {lr.chi2:.3f}, p = {lr.p:.4g}")

# Cox model with one covariate that lowers the hazard.
x = rng.normal(size=200)
hazard = np.exp(-0.7 * x)
times = rng.exponential(1.0 / hazard)
events = times < 3.0
times = np.minimum(times, 3.0)
fit = fit_cox(x[:, None], times, events, names=("Duration",))
print()
print(format_cox_table(fit))
print(f"one unit of Duration changes the hazard by {hazard_interpretation(fit, 'Duration', 1.0):.1f}%")
