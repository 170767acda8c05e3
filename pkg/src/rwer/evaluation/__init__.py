"""Ranking metrics, neighborhood baselines, splits and experiment runs."""

from .baselines import METHODS, baseline_scores
from .metrics import RankedList, auc, average_precision, mean_average_precision, precision_at_k, rank
from .split import EvalSplit, QuerySplit, make_link_prediction_split, make_ranking_split

__all__ = [
    "METHODS", "baseline_scores",
    "RankedList", "auc", "average_precision", "mean_average_precision", "precision_at_k", "rank",
    "EvalSplit", "QuerySplit", "make_link_prediction_split", "make_ranking_split",
]
