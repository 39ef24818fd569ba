"""Text and CSV renderings of survival results."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .cox import CoxFit, CoxTerm

COLUMNS = ("coef", "coef(exp)", "SE", "Pr(>|z|)")


def format_p(p: float) -> str:
    if p != p:
        return "nan"
    if p < 1e-4:
        return "<0.0001"
    return f"{p:.4f}"


def format_row(term: CoxTerm) -> tuple[str, ...]:
    return (f"{term.coef:.3f}", f"{term.exp_coef:.3f}", f"{term.se:.3f}", format_p(term.p))


def format_cox_table(fit: CoxFit, alpha: float = 0.05) -> str:
    """Aligned summary table; significant p values are starred."""
    rows = [(t.name,) + format_row(t)[:3] + (format_p(t.p) + (" *" if t.p < alpha else "  "),) for t in fit.terms]
    header = ("",) + COLUMNS
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    def line(cells):
        return "  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(cells))
    rule = "-" * len(line(header))
    out = [rule, line(header), rule] + [line(r) for r in rows] + [rule]
    out.append(f"n={fit.n}, events={fit.n_events}, log partial likelihood={fit.log_likelihood:.4f}, "
               f"ties={fit.ties}, iterations={fit.iterations}, converged={fit.converged}")
    return "\n".join(out)


def cox_csv(fit: CoxFit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["term", "coef", "exp_coef", "se", "z", "p"])
    for t in fit.terms:
        w.writerow([t.name, *(repr(float(v)) for v in (t.coef, t.exp_coef, t.se, t.z, t.p))])
    return buf.getvalue()


def write_cox_csv(fit: CoxFit, path: str | Path) -> None:
    Path(path).write_text(cox_csv(fit), encoding="utf-8")
