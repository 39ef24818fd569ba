"""End-to-end experiment pipelines.

``run_exp1``
    remove naturally occurring fillers and compare time to predicted turn shift.
``run_exp2``
    splice fillers onto the end of yes/no questions.
``run_exp3``
    Cox regression of the with-filler shift times from Experiment 1 on filler
    pitch, intensity, duration, lexical form and position.

Each returns an :class:`ExperimentReport`; :func:`write_report` serializes it
as Markdown plus CSV files from which every statistic can be recomputed.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash, dump_config
from .corpus import Corpus, load_corpus
from .predictor import ShiftOutcome, predict, turn_shift_time
from .prosody import covariate_table
from .stimulus import (Stimulus, build_exclusion_pair, build_insertion_pair, find_fillers, find_ynq_utterances,
                       manifest_record, write_manifest, write_stimulus_pair)
from .survival import (CoxFit, KMCurve, LogRankResult, SurvivalRecord, UndefinedStatistic, cox_fit,
                       format_cox_table, kaplan_meier_by_group, log_rank, write_cox_csv, write_km_csv,
                       write_records_csv)

logger = logging.getLogger(__name__)

WITH, WITHOUT = "with_filler", "without_filler"
COX_FORMULA = ("f0_std", "intensity_std", "lex_um", "log_duration_std", "pos_mid", "f0_std:lex_um")
COX_LABELS = {"f0_std": "F0", "intensity_std": "Intensity", "lex_um": "Lex_um", "log_duration_std": "Duration",
              "pos_mid": "Pos_mid", "f0_std:lex_um": "F0:Lex_um"}
COVARIATE_COLUMNS = ("f0_std", "intensity_std", "lex_um", "log_duration_std", "pos_mid", "f0_x_lexum")
RECORD_META = ("pair_id", "session", "speaker")


class ExperimentError(RuntimeError):
    """The data cannot support the requested analysis."""


@dataclass
class Trace:
    stimulus_id: str
    condition: str
    frame_rate: float
    values: np.ndarray
    silence_onset: float
    outcome: ShiftOutcome


@dataclass
class ExperimentReport:
    experiment: str
    status: str
    counts: dict
    records: list[SurvivalRecord]
    config_hash: str
    version: str = __version__
    km: dict[str, KMCurve] = field(default_factory=dict)
    logrank: LogRankResult | None = None
    cox: CoxFit | None = None
    excluded: dict[str, str] = field(default_factory=dict)
    traces: list[Trace] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def censoring(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for r in self.records:
            g = out.setdefault(r.group, {"n": 0, "events": 0, "censored": 0})
            g["n"] += 1
            g["events" if r.event else "censored"] += 1
        return dict(sorted(out.items()))


def _pmap(fn: Callable, items: Sequence, parallelism: int) -> list:
    if parallelism <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))


def _outcome(stim: Stimulus, cfg: ExperimentConfig):
    series = predict(stim, cfg.predictor)
    out = turn_shift_time(series, stim.silence_onset, threshold=cfg.threshold, horizon=cfg.layout.silence_len)
    return out, series


def _record(stim: Stimulus, outcome: ShiftOutcome, pair_id: str, group: str) -> SurvivalRecord:
    meta = {"pair_id": pair_id, "session": stim.metadata.get("session", ""), "speaker": stim.current_speaker.value}
    return SurvivalRecord(outcome.observed_time, not outcome.censored, group, None, stim.id, meta)


def _finish(report: ExperimentReport) -> ExperimentReport:
    report.records.sort(key=lambda r: r.id)
    if not report.records:
        return report
    report.km = kaplan_meier_by_group(report.records)
    if len(report.km) == 2:
        try:
            report.logrank = log_rank(report.records)
        except UndefinedStatistic as exc:
            report.notes.append(f"log-rank undefined: {exc}")
    return report


def _resolve_corpus(corpus: Corpus | str | Path | None, cfg: ExperimentConfig) -> Corpus:
    if isinstance(corpus, Corpus):
        return corpus
    path = corpus or cfg.corpus
    if path is None:
        raise ExperimentError("no corpus given")
    return load_corpus(path)


def _keep_trace(traces: list, cfg: ExperimentConfig, stim: Stimulus, series, outcome):
    if len(traces) < cfg.traces:
        traces.append(Trace(stim.id, stim.metadata.get("condition", ""), series.frame_rate,
                            series.values.copy(), stim.silence_onset, outcome))


def run_exp1(corpus: Corpus | str | Path | None, cfg: ExperimentConfig,
             members: Iterable[str] = ("treatment", "control")) -> ExperimentReport:
    """Compare turn-shift times with and without naturally occurring fillers."""
    corpus = _resolve_corpus(corpus, cfg)
    members = tuple(members)
    cands = [f for s in corpus for f in find_fillers(s, cfg.filler)]
    stim_dir = Path(cfg.output_dir) / "stimuli" if cfg.write_stimuli and cfg.output_dir else None

    def work(f):
        session = corpus.session(f.session_id)
        pair = build_exclusion_pair(session, f, corpus.audio(f.session_id), cfg.layout, cfg.exclusion_mode)
        rows = []
        for m in members:
            stim = getattr(pair, m)
            out, series = _outcome(stim, cfg)
            rows.append((stim, out, series))
        man = write_stimulus_pair(pair, stim_dir) if stim_dir else None
        return pair.id, rows, man

    results = _pmap(work, cands, cfg.parallelism)
    report = ExperimentReport("exp1", "ok" if cands else "empty",
                              {"sessions": len(corpus), "fillers": len(cands), "pairs": len(cands)},
                              [], config_hash(cfg))
    manifest = []
    for pid, rows, man in results:
        for stim, out, series in rows:
            report.records.append(_record(stim, out, pid, stim.metadata["condition"]))
            _keep_trace(report.traces, cfg, stim, series, out)
        if man:
            manifest.append(man)
    if stim_dir and manifest:
        write_manifest(manifest, stim_dir / "manifest.jsonl")
    if not cands:
        report.notes.append("no valid filler candidates found")
    return _finish(report)


def run_exp2(corpus: Corpus | str | Path | None, cfg: ExperimentConfig) -> ExperimentReport:
    """Compare yes/no questions with and without a spliced-on filler."""
    corpus = _resolve_corpus(corpus, cfg)
    report = ExperimentReport("exp2", "ok", {}, [], config_hash(cfg))
    jobs = []
    n_q = 0
    fillers_used = set()
    for s in corpus:
        audio = corpus.audio(s.id)
        found = find_ynq_utterances(s, cfg.predictor, cfg.ynq, audio, cfg.layout, return_outcomes=True)
        fillers = [f for f in find_fillers(s, cfg.filler) if f.duration <= cfg.layout.max_insert_duration]
        for q, ctl_out in found:
            n_q += 1
            ctl_meta = {"pair_id": q.id, "session": s.id, "speaker": q.speaker.value}
            report.records.append(SurvivalRecord(ctl_out.observed_time, not ctl_out.censored, WITHOUT, None,
                                                 q.id + ".control", ctl_meta))
            for f in fillers:
                if f.speaker is q.speaker:
                    jobs.append((s.id, q, f))
                    fillers_used.add(f.id)
    stim_dir = Path(cfg.output_dir) / "stimuli" if cfg.write_stimuli and cfg.output_dir else None

    def work(job):
        sid, q, f = job
        pair = build_insertion_pair(corpus.session(sid), q, f, corpus.audio(sid), cfg.layout)
        out, series = _outcome(pair.treatment, cfg)
        man = write_stimulus_pair(pair, stim_dir) if stim_dir else None
        return pair, out, series, man

    manifest = []
    for pair, out, series, man in _pmap(work, jobs, cfg.parallelism):
        report.records.append(_record(pair.treatment, out, pair.id, WITH))
        _keep_trace(report.traces, cfg, pair.treatment, series, out)
        if man:
            manifest.append(man)
    if stim_dir and manifest:
        write_manifest(manifest, stim_dir / "manifest.jsonl")
    report.counts = {"sessions": len(corpus), "questions": n_q, "filler_candidates": len(fillers_used),
                     "pairs": len(jobs)}
    if n_q == 0:
        report.status = "empty"
        report.notes.append("no valid yes/no-question utterances found")
    return _finish(report)


def run_exp3(corpus: Corpus | str | Path | None, cfg: ExperimentConfig,
             exp1_records: Sequence[SurvivalRecord] | None = None, table=None) -> ExperimentReport:
    """Cox regression of with-filler turn-shift times on filler covariates.

    ``exp1_records`` defaults to a treatment-only Experiment 1 run.  ``table``
    may pass a precomputed ``covariate_table`` result; covariates depend only
    on the corpus audio, so replicate runs over predictor seeds can share it.
    """
    corpus = _resolve_corpus(corpus, cfg)
    if exp1_records is None:
        exp1_records = run_exp1(corpus, cfg, members=("treatment",)).records
    with_filler = [r for r in exp1_records if r.group == WITH]
    by_id = {f.id: f for s in corpus for f in find_fillers(s, cfg.filler)}
    fillers, outcome = [], {}
    missing = []
    for r in with_filler:
        pid = r.meta.get("pair_id") or r.id.rsplit(".", 1)[0]
        if pid not in by_id:
            missing.append(pid)
            continue
        fillers.append(by_id[pid])
        outcome[pid] = r
    if missing:
        raise ExperimentError(f"{len(missing)} Experiment 1 records do not match fillers in the corpus "
                              f"(first: {missing[0]})")
    if table is None:
        table = covariate_table(fillers, corpus.audio, corpus.sample_rate, cfg.prosody)
    rows, excluded = table
    records = []
    for f, cov in rows:
        r = outcome.get(f.id)
        if r is None:
            continue
        records.append(SurvivalRecord(r.time, r.event, WITH, cov.as_dict(), r.id, dict(r.meta)))
    records.sort(key=lambda r: r.id)
    n_events = sum(r.event for r in records)
    report = ExperimentReport("exp3", "ok", {"fillers": len(fillers), "with_covariates": len(records),
                                             "excluded": len(excluded), "events": n_events},
                              records, config_hash(cfg), excluded=excluded)
    if n_events < cfg.min_cox_events:
        raise ExperimentError(f"only {n_events} turn-shift events among {len(records)} fillers with covariates; "
                              f"the Cox model needs at least {cfg.min_cox_events}. Use a larger corpus or a "
                              f"longer silence horizon.")
    report.cox = cox_fit(records, COX_FORMULA, COX_LABELS)
    if not report.cox.converged:
        report.notes.append("Cox fit did not converge; coefficients are unreliable")
    report.km = kaplan_meier_by_group(records)
    return report


# -- output -------------------------------------------------------------

def _fmt_p(p: float) -> str:
    return f"{p:.3g}" if p >= 1e-4 else f"{p:.2e}"


def report_markdown(report: ExperimentReport, cfg: ExperimentConfig) -> str:
    lines = [f"# {report.experiment} report", "", f"status: **{report.status}**", ""]
    lines.append("| count | value |")
    lines.append("|---|---|")
    lines += [f"| {k} | {v} |" for k, v in report.counts.items()]
    cens = report.censoring()
    if cens:
        lines += ["", "| group | n | events | censored |", "|---|---|---|---|"]
        lines += [f"| {g} | {c['n']} | {c['events']} | {c['censored']} |" for g, c in cens.items()]
    if report.km:
        lines += ["", "Median hold time (s, first time survival <= 0.5):", ""]
        for g, km in report.km.items():
            below = [s.time for s in km.steps if s.survival <= 0.5]
            lines.append(f"- {g}: {below[0]:.2f}" if below else f"- {g}: not reached")
    if report.logrank is not None:
        lr = report.logrank
        lines += ["", f"Log-rank test: chi2 = {lr.chi2:.4f} (df = {lr.df}), p = {_fmt_p(lr.p)}"]
    if report.cox is not None:
        lines += ["", "Cox proportional hazards (reference levels: Lex = uh, Pos = start):", "", "```",
                  format_cox_table(report.cox), "```"]
    if report.excluded:
        reasons: dict[str, int] = {}
        for why in report.excluded.values():
            reasons[why] = reasons.get(why, 0) + 1
        lines += ["", "Excluded from covariate table:", ""] + [f"- {w}: {n}" for w, n in sorted(reasons.items())]
    for note in report.notes:
        lines += ["", f"> {note}"]
    lines += ["", "## Provenance", "", f"- toolkit version: {report.version}", f"- config hash: {report.config_hash}",
              f"- predictor: {cfg.predictor.kind}", "", "```toml", dump_config(cfg).rstrip(), "```", ""]
    return "\n".join(lines)


def write_covariates_csv(records: Sequence[SurvivalRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("pair_id", "time", "censored") + COVARIATE_COLUMNS)
        for r in records:
            w.writerow([r.meta.get("pair_id", r.id), repr(r.time), int(not r.event)]
                       + [repr(float(r.covariates[c])) if c.endswith("_std") or c == "f0_x_lexum"
                          else int(r.covariates[c]) for c in COVARIATE_COLUMNS])


def read_covariates_csv(path: str | Path) -> list[SurvivalRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cov = {c: float(row[c]) for c in COVARIATE_COLUMNS}
            out.append(SurvivalRecord(float(row["time"]), row["censored"] == "0", WITH, cov,
                                      row["pair_id"] + ".treatment", {"pair_id": row["pair_id"]}))
    return out


def write_trace_csv(trace: Trace, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "thp", "silence_onset", "shift_time"])
        shift = "" if trace.outcome.censored else repr(trace.silence_onset + trace.outcome.time)
        for i, v in enumerate(trace.values):
            w.writerow([repr(i / trace.frame_rate), repr(float(v)), repr(trace.silence_onset) if i == 0 else "",
                        shift if i == 0 else ""])


def write_report(report: ExperimentReport, cfg: ExperimentConfig, out_dir: str | Path | None = None) -> Path:
    out = Path(out_dir or cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    name = report.experiment
    write_records_csv(report.records, out / f"{name}_records.csv", meta_names=RECORD_META)
    if report.km:
        write_km_csv(report.km, out / f"{name}_km.csv")
    if report.cox is not None:
        write_cox_csv(report.cox, out / f"{name}_cox.csv")
        (out / f"{name}_cox.txt").write_text(format_cox_table(report.cox) + "\n", encoding="utf-8")
        write_covariates_csv(report.records, out / f"{name}_covariates.csv")
    for tr in report.traces:
        write_trace_csv(tr, out / f"{name}_trace_{tr.stimulus_id}.csv")
    summary = {
        "experiment": name, "status": report.status, "counts": report.counts, "censoring": report.censoring(),
        "logrank": None if report.logrank is None else {"chi2": report.logrank.chi2, "df": report.logrank.df,
                                                          "p": report.logrank.p},
        "cox": None if report.cox is None else [
            {"term": t.name, "coef": t.coef, "exp_coef": t.exp_coef, "se": t.se, "z": t.z, "p": t.p}
            for t in report.cox.terms],
        "notes": report.notes, "config_hash": report.config_hash, "version": report.version,
    }
    (out / f"{name}_report.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    (out / f"{name}_report.md").write_text(report_markdown(report, cfg), encoding="utf-8")
    return out


__all__ = ["COX_FORMULA", "COX_LABELS", "ExperimentError", "ExperimentReport", "Trace", "WITH", "WITHOUT",
           "read_covariates_csv", "report_markdown", "run_exp1", "run_exp2", "run_exp3", "write_covariates_csv",
           "write_report", "write_trace_csv", "manifest_record"]
