"""Independent reference computations used by the survival tests.

These are deliberately naive loops written from the definitions, sharing no
code with the package.
"""

import math

import numpy as np


def km_oracle(time, event):
    """Product-limit estimate by direct enumeration: list of (t, S(t))."""
    pts = sorted(set(time))
    s = 1.0
    out = []
    for t in pts:
        at_risk = sum(1 for ti in time if ti >= t)
        d = sum(1 for ti, ei in zip(time, event) if ti == t and ei)
        s *= 1.0 - d / at_risk
        out.append((t, s))
    return out


def logrank_oracle(time, event, group, first):
    """Observed, expected and variance for group ``first`` by a per-time table."""
    o = e = v = 0.0
    for t in sorted({ti for ti, ei in zip(time, event) if ei}):
        n = n1 = d = d1 = 0
        for ti, ei, gi in zip(time, event, group):
            if ti >= t:
                n += 1
                n1 += gi == first
                if ti == t and ei:
                    d += 1
                    d1 += gi == first
        o += d1
        e += d * n1 / n
        if n > 1:
            v += d * n1 * (n - n1) * (n - d) / (n * n * (n - 1))
    return o, e, v


def cox_loglik_oracle(beta, X, time, event):
    """Exact partial log-likelihood for tie-free data."""
    beta = np.atleast_1d(beta)
    ll = 0.0
    for i in range(len(time)):
        if not event[i]:
            continue
        eta_i = sum(b * x for b, x in zip(beta, X[i]))
        denom = 0.0
        for j in range(len(time)):
            if time[j] >= time[i]:
                denom += math.exp(sum(b * x for b, x in zip(beta, X[j])))
        ll += eta_i - math.log(denom)
    return ll


def grid_argmax(f, dim, lo=-6.0, hi=6.0, n=15, rounds=12):
    """Grid search of ``f`` on ``[lo, hi]^dim``, zooming around the best point.

    Returns ``(argmax, max, interior)``; ``interior`` is False when the coarse
    maximum sits on the box boundary (the supremum may lie outside).
    """
    center = np.full(dim, (hi + lo) / 2)
    half = (hi - lo) / 2
    interior = True
    for r in range(rounds):
        axes = [np.linspace(c - half, c + half, n) for c in center]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)
        vals = np.array([f(b) for b in mesh])
        best = mesh[int(np.argmax(vals))]
        if r == 0:
            interior = bool(np.all((best > lo) & (best < hi)))
        center = best
        half *= 4.0 / (n - 1)
    return center, f(center), interior
