"""Seeded train/test splits for link prediction and label-based ranking."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..graph import SparseGraph, from_edges

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuerySplit:
    query: int
    train_positives: np.ndarray
    train_negatives: np.ndarray
    held_out: np.ndarray        # relevant items at test time
    test_negatives: np.ndarray
    candidates: np.ndarray      # nodes ranked at test time


@dataclass
class EvalSplit:
    train_graph: SparseGraph
    queries: list
    skipped: list = field(default_factory=list)


def _sample(rng, pool, k):
    pool = np.asarray(pool, dtype=np.int64)
    k = min(k, pool.size)
    return np.sort(rng.choice(pool, size=k, replace=False)) if k else pool[:0]


def _pick_queries(rng, eligible, queries, num_queries):
    if queries is not None:
        return [int(q) for q in queries]
    eligible = np.asarray(eligible, dtype=np.int64)
    if num_queries is None or num_queries >= eligible.size:
        return eligible.tolist()
    return np.sort(rng.choice(eligible, size=num_queries, replace=False)).tolist()


def _out_neighbors(g: SparseGraph, s: int) -> np.ndarray:
    a = g.adjacency
    row = a.indices[a.indptr[s]:a.indptr[s + 1]]
    return row[row != s]


def make_link_prediction_split(g: SparseGraph, holdout_fraction: float, negatives_per_query: int,
                               rng_seed: int, queries=None, num_queries=None,
                               train_negatives: int | None = None) -> EvalSplit:
    """Hide a fraction of each query's out-edges and sample non-neighbors as negatives.

    Held-out links are removed in both directions so the reverse edge does not
    leak them.  Train positives are the query's remaining out-neighbors; train
    and test negatives are disjoint samples of nodes with no edge to or from
    the query in the full graph.  Candidates exclude the query and its train
    neighbors.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must lie in (0, 1)")
    if negatives_per_query < 1:
        raise ValueError("negatives_per_query must be >= 1")
    train_negatives = negatives_per_query if train_negatives is None else train_negatives
    rng = np.random.default_rng(rng_seed)
    full_nb = g.undirected_neighbors()
    eligible = [v for v in range(g.n) if _out_neighbors(g, v).size >= 2]
    chosen = _pick_queries(rng, eligible, queries, num_queries)

    removed = set()
    held = {}
    skipped = []
    for s in chosen:
        out = _out_neighbors(g, s)
        k = int(round(holdout_fraction * out.size))
        k = min(max(k, 1), out.size - 1)
        if out.size < 2 or k < 1:
            log.info("query %d skipped: only %d out-edges", s, out.size)
            skipped.append(s)
            continue
        h = _sample(rng, out, k)
        held[s] = h
        for v in h.tolist():
            removed.add((s, v))
            removed.add((v, s))

    coo = g.adjacency.tocoo()
    keep = np.array([(int(i), int(j)) not in removed for i, j in zip(coo.row, coo.col)], dtype=bool)
    train = from_edges(coo.row[keep], coo.col[keep], coo.data[keep], n=g.n, labels=g.labels)
    train_nb = train.undirected_neighbors()

    out_splits = []
    for s, h in held.items():
        pos = _out_neighbors(train, s)
        pos = pos[~np.isin(pos, h)]
        if pos.size == 0:
            log.info("query %d skipped: no train positives left", s)
            skipped.append(s)
            continue
        banned = np.union1d(full_nb[s], [s])
        pool = np.setdiff1d(np.arange(g.n), banned)
        pool = rng.permutation(pool)
        n_test = min(negatives_per_query, pool.size // 2 if train_negatives else pool.size)
        test_neg = np.sort(pool[:n_test])
        train_neg = np.sort(pool[n_test:n_test + train_negatives])
        if test_neg.size == 0 or train_neg.size == 0:
            log.info("query %d skipped: not enough non-neighbors", s)
            skipped.append(s)
            continue
        cand = np.setdiff1d(np.arange(g.n), np.union1d(train_nb[s], [s]))
        out_splits.append(QuerySplit(s, np.sort(pos), train_neg, h, test_neg, cand))
    return EvalSplit(train, out_splits, skipped)


def make_ranking_split(g: SparseGraph, classes, n_train_positives: int, n_train_negatives: int,
                       rng_seed: int, queries=None, num_queries=None) -> EvalSplit:
    """Label-based ranking: same-class nodes are relevant, other classes are not.

    For each query a few same-class nodes become train positives and a few
    other-class nodes train negatives; the rest form the test set.  The graph
    itself is left untouched.
    """
    classes = np.asarray(classes)
    if classes.shape != (g.n,):
        raise ValueError("need one class per node")
    rng = np.random.default_rng(rng_seed)
    chosen = _pick_queries(rng, np.arange(g.n), queries, num_queries)
    splits, skipped = [], []
    for s in chosen:
        same = np.flatnonzero(classes == classes[s])
        same = same[same != s]
        other = np.flatnonzero(classes != classes[s])
        if same.size <= n_train_positives or other.size <= n_train_negatives:
            skipped.append(s)
            continue
        tp = _sample(rng, same, n_train_positives)
        tn = _sample(rng, other, n_train_negatives)
        held = np.setdiff1d(same, tp)
        test_neg = np.setdiff1d(other, tn)
        cand = np.setdiff1d(np.arange(g.n), np.concatenate([[s], tp, tn]))
        splits.append(QuerySplit(int(s), tp, tn, held, test_neg, cand))
    return EvalSplit(g, splits, skipped)
