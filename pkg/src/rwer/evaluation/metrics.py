"""Ranking metrics.  Ties in score are always broken by ascending node id."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RankedList:
    nodes: np.ndarray  # descending score, ties by ascending id
    scores: np.ndarray

    def __len__(self):
        return len(self.nodes)


def rank(scores, candidates=None) -> RankedList:
    """Order ``candidates`` (default: every node) by descending score."""
    scores = np.asarray(scores, dtype=np.float64)
    if candidates is None:
        candidates = np.arange(scores.size)
    cand = np.unique(np.asarray(candidates, dtype=np.int64))
    s = scores[cand]
    # lexsort keys: last is primary
    order = np.lexsort((cand, -s))
    return RankedList(cand[order], s[order])


def average_precision(ranked: RankedList, relevant) -> float:
    rel = set(int(v) for v in relevant)
    if not rel:
        raise ValueError("average precision needs at least one relevant item")
    missing = rel.difference(int(v) for v in ranked.nodes)
    if missing:
        raise ValueError(f"relevant items not among the candidates: {sorted(missing)[:5]}")
    hits = np.isin(ranked.nodes, list(rel))
    positions = np.flatnonzero(hits) + 1
    return float(np.mean(np.arange(1, len(positions) + 1) / positions))


def mean_average_precision(aps) -> float:
    aps = list(aps)
    if not aps:
        raise ValueError("no average precisions to average")
    return float(np.mean(aps))


def auc(scores, positives, negatives) -> float:
    """Fraction of (positive, negative) pairs ordered correctly; ties count 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[np.asarray(list(positives), dtype=np.int64)]
    neg = scores[np.asarray(list(negatives), dtype=np.int64)]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs non-empty positive and negative sets")
    # rank-based count: O((|P|+|N|) log) instead of the pairwise O(|P||N|)
    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    upto = np.searchsorted(neg_sorted, pos, side="right")
    wins = below.sum() + 0.5 * (upto - below).sum()
    return float(wins / (pos.size * neg.size))


def precision_at_k(ranked: RankedList, relevant, k: int = 20) -> float:
    """|top-k ∩ relevant| / k.  Slots past the end of a short list count as misses."""
    if k < 1:
        raise ValueError("k must be >= 1")
    top = ranked.nodes[:k]
    return float(np.isin(top, list(set(int(v) for v in relevant))).sum() / k)
