"""Exploit prediction for disclosed vulnerabilities from tweets and vulnerability databases."""

from .balance import SamplerConfig, adasyn, all_knn, random_undersample, smote
from .evaluation import (
    cross_validate,
    paired_ttest,
    point_metrics,
    pr_curve,
    stratified_kfold,
    temporal_experiment,
)
from .features import apply_standardizer, build_matrix, fit_standardizer
from .groundtruth import coverage_by_year, intersection_report, merge_ground_truth
from .ingest import (
    Source,
    load_poc_listing,
    load_tweets,
    parse_nvd_feed,
    parse_vendor_signatures,
)
from .learn import ClassifierSpec, fit, predict, score
from .model import CveId, assemble_dataset, extract_cve_ids

__version__ = "0.1.0"

__all__ = [
    "adasyn",
    "all_knn",
    "apply_standardizer",
    "assemble_dataset",
    "build_matrix",
    "ClassifierSpec",
    "coverage_by_year",
    "cross_validate",
    "CveId",
    "extract_cve_ids",
    "fit",
    "fit_standardizer",
    "intersection_report",
    "load_poc_listing",
    "load_tweets",
    "merge_ground_truth",
    "paired_ttest",
    "parse_nvd_feed",
    "parse_vendor_signatures",
    "point_metrics",
    "pr_curve",
    "predict",
    "random_undersample",
    "SamplerConfig",
    "score",
    "smote",
    "Source",
    "stratified_kfold",
    "temporal_experiment",
]
