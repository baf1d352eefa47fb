"""Evaluation: rank AUC, small-n confidence intervals, desk FID, baseline."""

from mialab.metrics.auc import roc_auc
from mialab.metrics.baseline import baseline_score, build_prototypes
from mialab.metrics.ci import IntervalEstimate, confidence_interval
from mialab.metrics.features import FeatureEmbedder, FeatureStats, extract_features
from mialab.metrics.fid import fid

__all__ = [
    "FeatureEmbedder",
    "FeatureStats",
    "IntervalEstimate",
    "baseline_score",
    "build_prototypes",
    "confidence_interval",
    "extract_features",
    "fid",
    "roc_auc",
]
