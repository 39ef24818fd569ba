"""Command-line entry point.

Exit codes: 0 success (empty results included), 1 usage or configuration
error, 2 data error, 3 predictor error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .experiments import ExperimentError, run_exp1, run_exp2, run_exp3, write_report
from .plotting import km_svg, read_trace_csv, thp_svg
from .predictor import PREDICTOR_CMD_ENV, CoverageError, PredictorError
from .streams import StreamFormatError
from .survival import kaplan_meier_by_group, read_km_csv, read_records_csv, write_km_csv
from .synth import generate_corpus, write_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PREDICTOR = 0, 1, 2, 3
log = logging.getLogger("fillerhold")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. --set filler.min_duration=0.25")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _exp_args(p: argparse.ArgumentParser):
    _common(p)
    p.add_argument("--corpus", help="corpus directory or corpus.json")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--predictor", choices=("synthetic", "stream-file", "external-process"),
                   help="predictor kind")
    p.add_argument("--predictor-cmd", help=f"external predictor command (default: ${PREDICTOR_CMD_ENV})")
    p.add_argument("--stream-dir", help="directory of precomputed <stimulus id>.vapd/.vapt files")
    p.add_argument("--traces", type=int, help="write THP traces for the first N stimuli")
    p.add_argument("--write-stimuli", action="store_true", help="also write stimulus WAVs and a manifest")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fillerhold", description="Filler turn-hold experiments on VAP-style predictions.")
    ap.add_argument("--version", action="version", version=f"fillerhold {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    s = sub.add_parser("synth", help="generate a synthetic corpus with a ground-truth ledger")
    _common(s)
    for name in ("exp1", "exp2", "exp3"):
        e = sub.add_parser(name, help={"exp1": "filler exclusion", "exp2": "filler insertion after yes/no questions",
                                       "exp3": "Cox model of filler prosody"}[name])
        _exp_args(e)
        if name == "exp3":
            e.add_argument("--exp1-records", help="records CSV from exp1 (default: run exp1 treatment members)")
    p = sub.add_parser("plot", help="render a KM or THP-trace figure as SVG plus CSV")
    p.add_argument("--kind", required=True, help="km or thp-trace")
    p.add_argument("--input", required=True, help="KM CSV, records CSV or trace CSV")
    p.add_argument("--out", required=True, help="output path; .svg and .csv are written next to it")
    p.add_argument("--title")
    return ap


def _overrides(args) -> list[str]:
    sets = list(args.set)
    if args.seed is not None:
        sets.append(f"seed={args.seed}")
        key = "synth.seed" if args.command == "synth" else "predictor.synthetic.noise_seed"
        sets.append(f"{key}={args.seed}")
    if args.out:
        sets.append(f"output_dir={json.dumps(args.out)}")
    for flag, key in (("corpus", "corpus"), ("predictor_cmd", "predictor.command"),
                      ("stream_dir", "predictor.stream_dir"), ("predictor", "predictor.kind")):
        v = getattr(args, flag, None)
        if v:
            sets.append(f"{key}={json.dumps(v)}")
    for flag in ("parallelism", "traces"):
        v = getattr(args, flag, None)
        if v is not None:
            sets.append(f"{flag}={v}")
    if getattr(args, "write_stimuli", False):
        sets.append("write_stimuli=true")
    return sets


def _cmd_synth(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    out = Path(cfg.output_dir or "synthetic_corpus")
    synth = generate_corpus(cfg.synth)
    write_corpus(synth, out)
    counts = synth.ledger()["counts"]
    print(f"wrote {len(synth.sessions)} sessions to {out} "
          f"({counts['valid_fillers']} valid fillers, {counts['valid_questions']} valid questions)")
    return EXIT_OK


def _cmd_exp(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    if cfg.corpus is None:
        raise UsageError(f"{args.command}: a corpus is required (--corpus or corpus = ... in the config)")
    if cfg.output_dir is None:
        raise UsageError(f"{args.command}: an output directory is required (--out)")
    if args.command == "exp1":
        report = run_exp1(cfg.corpus, cfg)
    elif args.command == "exp2":
        report = run_exp2(cfg.corpus, cfg)
    else:
        records = read_records_csv(args.exp1_records) if args.exp1_records else None
        report = run_exp3(cfg.corpus, cfg, records)
    out = write_report(report, cfg)
    print(f"{report.experiment}: status {report.status}, {len(report.records)} records, report in {out}")
    if report.logrank is not None:
        print(f"log-rank chi2 = {report.logrank.chi2:.4f}, p = {report.logrank.p:.4g}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    if args.kind not in ("km", "thp-trace"):
        raise UsageError(f"plot: unknown kind {args.kind!r} (choose km or thp-trace)")
    src = Path(args.input)
    out = Path(args.out)
    svg_path, csv_path = out.with_suffix(".svg"), out.with_suffix(".csv")
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    with open(src, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if args.kind == "km":
        if "survival" in header:
            curves = read_km_csv(src)
        elif "event" in header:
            curves = kaplan_meier_by_group(read_records_csv(src))
        else:
            raise ValueError(f"{src}: neither a KM CSV nor a records CSV")
        svg = km_svg(curves, title=args.title or "Kaplan-Meier estimate of hold")
        write_km_csv(curves, csv_path)
    else:
        if "thp" not in header:
            raise ValueError(f"{src}: not a THP trace CSV")
        trace = read_trace_csv(src)
        svg = thp_svg(trace, title=args.title or "Turn-hold probability")
        _write_trace(trace, csv_path)
    svg_path.write_text(svg, encoding="utf-8")
    print(f"wrote {svg_path} and {csv_path}")
    return EXIT_OK


def _write_trace(trace, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "thp", "silence_onset", "shift_time"])
        shift = "" if trace.shift_time is None else repr(trace.shift_time)
        for i, (t, v) in enumerate(zip(trace.times, trace.values)):
            w.writerow([repr(float(t)), repr(float(v)), repr(trace.silence_onset) if i == 0 else "",
                        shift if i == 0 else ""])


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "plot":
            return _cmd_plot(args)
        return _cmd_exp(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PredictorError, CoverageError, StreamFormatError) as exc:
        print(f"predictor error: {exc}", file=sys.stderr)
        return EXIT_PREDICTOR
    except (ExperimentError, ValueError, OSError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
