"""Kaplan-Meier, log-rank and Cox proportional-hazards tools."""

from .cox import (CoxFit, CoxTerm, RankDeficientError, cox_fit, design_matrix, fit_cox, hazard_change,
                  hazard_interpretation, partial_likelihood, prepare)
from .kaplan_meier import KMCurve, KMStep, dominates, kaplan_meier, kaplan_meier_by_group, read_km_csv, write_km_csv
from .logrank import LogRankResult, UndefinedStatistic, log_rank
from .records import SurvivalRecord, read_records_csv, write_records_csv
from .report import cox_csv, format_cox_table, write_cox_csv
from .special import chi2_sf, gammainc_lower, gammainc_upper, norm_two_sided

__all__ = [
    "CoxFit", "CoxTerm", "KMCurve", "KMStep", "LogRankResult", "RankDeficientError", "SurvivalRecord",
    "UndefinedStatistic", "chi2_sf", "cox_csv", "cox_fit", "design_matrix", "dominates", "fit_cox",
    "format_cox_table", "gammainc_lower", "gammainc_upper", "hazard_change", "hazard_interpretation",
    "kaplan_meier", "kaplan_meier_by_group", "log_rank", "norm_two_sided", "partial_likelihood", "prepare",
    "read_km_csv", "read_records_csv", "write_cox_csv", "write_km_csv", "write_records_csv",
]
