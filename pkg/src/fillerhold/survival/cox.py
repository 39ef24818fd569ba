"""Cox proportional-hazards regression by damped Newton iteration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .records import SurvivalRecord
from .special import norm_two_sided

logger = logging.getLogger(__name__)

TIES = ("efron", "breslow")


class RankDeficientError(ValueError):
    """The design matrix is not of full column rank."""

    def __init__(self, terms: Sequence[str]):
        super().__init__(f"design matrix is rank deficient; collinear or constant terms: {', '.join(terms)}")
        self.terms = tuple(terms)


@dataclass(frozen=True)
class CoxTerm:
    name: str
    coef: float
    exp_coef: float
    se: float
    z: float
    p: float


@dataclass(frozen=True)
class CoxFit:
    terms: tuple[CoxTerm, ...]
    log_likelihood: float
    null_log_likelihood: float
    iterations: int
    converged: bool
    ties: str
    n: int
    n_events: int
    covariance: np.ndarray

    @property
    def names(self) -> list[str]:
        return [t.name for t in self.terms]

    @property
    def coef(self) -> np.ndarray:
        return np.array([t.coef for t in self.terms])

    def term(self, name: str) -> CoxTerm:
        for t in self.terms:
            if t.name == name:
                return t
        raise KeyError(f"no term {name!r} in fit (terms: {self.names})")


class _Prepared:
    """Sorted data and tie structure, independent of the coefficients."""

    def __init__(self, X, time, event):
        order = np.argsort(time, kind="mergesort")
        self.X = np.asarray(X, dtype=np.float64)[order]
        self.t = np.asarray(time, dtype=np.float64)[order]
        self.e = np.asarray(event, dtype=bool)[order]
        ev_t = np.unique(self.t[self.e])
        self.risk_start = np.searchsorted(self.t, ev_t, side="left")
        self.groups = [np.flatnonzero(self.e & (self.t == ti)) for ti in ev_t]


def prepare(X, time, event) -> _Prepared:
    """Sort data and index tie groups once for repeated likelihood evaluations."""
    X = np.asarray(X, dtype=np.float64)
    return _Prepared(X[:, None] if X.ndim == 1 else X, time, event)


def partial_likelihood(beta, prep: _Prepared, ties: str = "efron", derivatives: bool = True):
    """Log partial likelihood and optionally its gradient and Hessian."""
    if ties not in TIES:
        raise ValueError(f"ties must be one of {TIES}")
    X = prep.X
    p = X.shape[1]
    eta = X @ np.asarray(beta, dtype=np.float64)
    c = eta.max() if len(eta) else 0.0
    w = np.exp(eta - c)
    # reverse cumulative sums give risk-set totals for t >= tau
    r0 = np.cumsum(w[::-1])[::-1]
    ll = 0.0
    if derivatives:
        wx = w[:, None] * X
        r1 = np.cumsum(wx[::-1], axis=0)[::-1]
        wxx = wx[:, :, None] * X[:, None, :]
        r2 = np.cumsum(wxx[::-1], axis=0)[::-1]
        grad = np.zeros(p)
        hess = np.zeros((p, p))
    for start, D in zip(prep.risk_start, prep.groups):
        d = len(D)
        s0 = w[D].sum()
        ll += eta[D].sum()
        if derivatives:
            s1 = wx[D].sum(axis=0)
            s2 = wxx[D].sum(axis=0)
            grad += X[D].sum(axis=0)
        for k in range(d):
            f = k / d if ties == "efron" else 0.0
            a0 = r0[start] - f * s0
            ll -= math.log(a0) + c
            if derivatives:
                a1 = r1[start] - f * s1
                a2 = r2[start] - f * s2
                mean = a1 / a0
                grad -= mean
                hess -= a2 / a0 - np.outer(mean, mean)
    if derivatives:
        return ll, grad, hess
    return ll


def collinear_terms(X: np.ndarray, names: Sequence[str]) -> list[str]:
    """Names of columns that add no rank to the centred design (with their partners)."""
    Xc = X - X.mean(axis=0)
    p = X.shape[1]
    if p == 0 or np.linalg.matrix_rank(Xc) == p:
        return []
    bad: list[str] = []
    kept: list[int] = []
    for j in range(p):
        cols = kept + [j]
        if np.linalg.matrix_rank(Xc[:, cols]) < len(cols):
            if not np.any(np.abs(Xc[:, j]) > 0):
                bad.append(names[j])
                continue
            # find the smallest subset of earlier columns spanning column j
            coef, *_ = np.linalg.lstsq(Xc[:, kept], Xc[:, j], rcond=None)
            partners = [names[kept[i]] for i in np.flatnonzero(np.abs(coef) > 1e-8)]
            bad.extend(n for n in partners + [names[j]] if n not in bad)
        else:
            kept.append(j)
    return bad


def fit_cox(X, time, event, names: Sequence[str] | None = None, ties: str = "efron",
            max_iter: int = 50, tol: float = 1e-9, max_halvings: int = 40) -> CoxFit:
    """Fit a Cox model to a design matrix ``X`` (n x p).

    Newton steps start from zero and are halved until the log partial
    likelihood does not decrease.  Iteration stops when the relative change in
    log likelihood falls below ``tol`` or after ``max_iter`` iterations; a fit
    that hit the limit is returned with ``converged=False``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    names = list(names) if names is not None else [f"x{j}" for j in range(p)]
    event = np.asarray(event, dtype=bool)
    if not event.any():
        raise ValueError("Cox fit needs at least one event")
    bad = collinear_terms(X, names)
    if bad:
        raise RankDeficientError(bad)
    prep = _Prepared(X, time, event)
    beta = np.zeros(p)
    ll, g, H = partial_likelihood(beta, prep, ties)
    ll0 = ll
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(-H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(-H, g, rcond=None)[0]
        for _ in range(max_halvings):
            cand = beta + step
            ll_new, g_new, H_new = partial_likelihood(cand, prep, ties)
            if np.isfinite(ll_new) and ll_new >= ll:
                break
            step = step / 2.0
        else:
            # no ascent direction left; we are at the optimum to working precision
            converged = True
            break
        change = abs(ll_new - ll)
        beta, ll, g, H = cand, ll_new, g_new, H_new
        if change <= tol * max(abs(ll), 1e-300):
            converged = True
            break
    if not converged:
        logger.warning("Cox fit did not converge in %d iterations (log-lik %.6g)", max_iter, ll)
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        cov = np.full((p, p), np.nan)
    se = np.sqrt(np.where(np.diag(cov) > 0, np.diag(cov), np.nan))
    terms = []
    for j, name in enumerate(names):
        z = beta[j] / se[j] if se[j] > 0 else float("nan")
        terms.append(CoxTerm(name, float(beta[j]), math.exp(beta[j]), float(se[j]), float(z),
                             norm_two_sided(z) if math.isfinite(z) else float("nan")))
    return CoxFit(tuple(terms), float(ll), float(ll0), it, converged, ties, n, int(event.sum()), cov)


def design_matrix(records: Sequence[SurvivalRecord], formula: Sequence[str]) -> np.ndarray:
    """Columns for each formula term; ``"a:b"`` is the product of covariates a and b."""
    cols = []
    for term in formula:
        parts = term.split(":")
        col = np.ones(len(records))
        for part in parts:
            try:
                col = col * np.array([float(r.covariates[part]) for r in records])
            except (KeyError, TypeError):
                raise KeyError(f"covariate {part!r} (term {term!r}) missing from some record") from None
        cols.append(col)
    return np.column_stack(cols) if cols else np.zeros((len(records), 0))


def cox_fit(records: Sequence[SurvivalRecord], formula: Sequence[str], labels: Mapping[str, str] | None = None,
            ties: str = "efron", **kwargs) -> CoxFit:
    """Fit a Cox model to survival records with covariates.

    ``formula`` lists covariate names, with ``a:b`` for interactions;
    ``labels`` optionally renames terms in the result.
    """
    X = design_matrix(records, formula)
    names = [labels.get(f, f) if labels else f for f in formula]
    return fit_cox(X, [r.time for r in records], [r.event for r in records], names, ties, **kwargs)


def hazard_change(coef: float, delta: float = 1.0) -> float:
    """Percent change in hazard for a ``delta`` change in a covariate."""
    return (math.exp(coef * delta) - 1.0) * 100.0


def hazard_interpretation(fit: CoxFit, term: str, delta: float = 1.0) -> float:
    return hazard_change(fit.term(term).coef, delta)
