import json

import numpy as np
import pytest

from fillerhold.config import load_config
from fillerhold.corpus import Corpus
from fillerhold.experiments import (COX_FORMULA, ExperimentError, read_covariates_csv, run_exp1, run_exp2,
                                    run_exp3, write_report)
from fillerhold.survival import (SurvivalRecord, cox_fit, kaplan_meier_by_group, log_rank, read_km_csv,
                                 read_records_csv)
from fillerhold.synth import SynthConfig, generate_corpus


@pytest.fixture(scope="module")
def corpus(small_synth):
    return small_synth.corpus()


def cfg(*sets, **kw):
    return load_config(None, list(sets) + [f"{k}={json.dumps(v)}" for k, v in kw.items()])


def test_exp1_records(corpus, small_synth):
    rep = run_exp1(corpus, cfg())
    n = small_synth.ledger()["counts"]["valid_fillers"]
    assert rep.status == "ok" and rep.counts["pairs"] == n and len(rep.records) == 2 * n
    assert [r.id for r in rep.records] == sorted(r.id for r in rep.records)
    groups = {r.group for r in rep.records}
    assert groups == {"with_filler", "without_filler"}
    assert rep.logrank.p < 0.001


def test_exp1_outputs_recompute(corpus, tmp_path):
    c = cfg(output_dir=str(tmp_path), traces=2)
    rep = run_exp1(corpus, c)
    write_report(rep, c)
    recs = read_records_csv(tmp_path / "exp1_records.csv")
    lr = log_rank(recs)
    assert lr.chi2 == rep.logrank.chi2 and lr.p == rep.logrank.p
    km = read_km_csv(tmp_path / "exp1_km.csv")
    assert km == kaplan_meier_by_group(recs) == rep.km
    summary = json.loads((tmp_path / "exp1_report.json").read_text())
    assert summary["config_hash"] == rep.config_hash and summary["logrank"]["chi2"] == lr.chi2
    md = (tmp_path / "exp1_report.md").read_text()
    assert rep.config_hash in md and "Log-rank" in md
    assert len(list(tmp_path.glob("exp1_trace_*.csv"))) == 2


def test_reproducible_and_parallel(corpus, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    write_report(run_exp1(corpus, cfg(output_dir=str(a))), cfg(output_dir=str(a)))
    write_report(run_exp1(corpus, cfg(output_dir=str(b), parallelism=3)), cfg(output_dir=str(b)))
    for name in ("exp1_records.csv", "exp1_km.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_empty_corpus():
    rep = run_exp1(Corpus([]), cfg())
    assert rep.status == "empty" and rep.records == [] and rep.logrank is None
    rep = run_exp2(Corpus([]), cfg())
    assert rep.status == "empty"


def test_exp2(corpus, small_synth):
    rep = run_exp2(corpus, cfg())
    ledger = small_synth.ledger()["counts"]
    assert rep.counts["questions"] == ledger["valid_questions"]
    assert rep.counts["pairs"] == ledger["insertion_pairs"]
    ctl = [r for r in rep.records if r.group == "without_filler"]
    assert len(ctl) == ledger["valid_questions"]
    assert all(abs(r.time - 0.8) <= 0.02 for r in ctl)
    assert rep.logrank.p < 0.001


def test_exp2_trailing_listener_zero_candidates():
    rep = run_exp2(generate_corpus(SynthConfig(n_sessions=1, ynq_trailing_listener=True)).corpus(), cfg())
    assert rep.status == "empty" and rep.counts["questions"] == 0


def test_exp3(corpus, tmp_path):
    c = cfg(output_dir=str(tmp_path))
    rep = run_exp3(corpus, c)
    assert rep.cox is not None and rep.cox.names == ["F0", "Intensity", "Lex_um", "Duration", "Pos_mid", "F0:Lex_um"]
    write_report(rep, c)
    recs = read_covariates_csv(tmp_path / "exp3_covariates.csv")
    refit = cox_fit(recs, COX_FORMULA)
    np.testing.assert_allclose(refit.coef, rep.cox.coef, rtol=1e-12)
    header = (tmp_path / "exp3_covariates.csv").read_text().splitlines()[0]
    assert header == "pair_id,time,censored,f0_std,intensity_std,lex_um,log_duration_std,pos_mid,f0_x_lexum"
    assert "coef(exp)" in (tmp_path / "exp3_cox.txt").read_text()


def test_exp3_reuses_exp1_records(corpus):
    rep1 = run_exp1(corpus, cfg())
    a = run_exp3(corpus, cfg(), rep1.records)
    b = run_exp3(corpus, cfg())
    np.testing.assert_array_equal(a.cox.coef, b.cox.coef)


def test_exp3_too_few_events(corpus):
    with pytest.raises(ExperimentError, match="at least"):
        run_exp3(corpus, cfg(min_cox_events=10_000))


def test_exp3_unknown_records(corpus):
    bogus = [SurvivalRecord(1.0, True, "with_filler", None, "zzz.treatment", {"pair_id": "zzz"})]
    with pytest.raises(ExperimentError, match="do not match"):
        run_exp3(corpus, cfg(), bogus)


def test_write_stimuli(corpus, tmp_path):
    c = cfg(output_dir=str(tmp_path), write_stimuli=True)
    rep = run_exp1(corpus, c)
    man = (tmp_path / "stimuli" / "manifest.jsonl").read_text().splitlines()
    assert len(man) == rep.counts["pairs"]
    rec = json.loads(man[0])
    assert (tmp_path / "stimuli" / rec["treatment"]["wav"]).exists()


def test_censoring_flows_into_records(corpus):
    rep = run_exp1(corpus, cfg("predictor.synthetic.base_hold_time=12", "predictor.synthetic.hold_jitter=0"))
    assert all(not r.event and r.time == 10.0 for r in rep.records)
    assert rep.censoring()["with_filler"]["censored"] == rep.counts["pairs"]
