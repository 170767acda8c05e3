"""Neighborhood baselines (CN, AA, JC) on the undirected view, plus RWR."""

from __future__ import annotations

import math

import numpy as np

from ..engine import IterationConfig, rwr_scores
from ..graph import SparseGraph, row_normalize

METHODS = ("CN", "AA", "JC", "RWR")


def _neighbor_sets(g: SparseGraph, neighbors=None):
    if neighbors is None:
        neighbors = g.undirected_neighbors()
    return neighbors


def common_neighbors(g: SparseGraph, s: int, neighbors=None) -> np.ndarray:
    nb = _neighbor_sets(g, neighbors)
    gs = set(nb[s].tolist())
    return np.array([len(gs.intersection(nb[u].tolist())) for u in range(g.n)], dtype=np.float64)


def adamic_adar(g: SparseGraph, s: int, neighbors=None) -> np.ndarray:
    # neighbors z with degree <= 1 would give 1/log(1); they contribute 0
    nb = _neighbor_sets(g, neighbors)
    weight = np.array([1.0 / math.log(len(z)) if len(z) > 1 else 0.0 for z in nb])
    out = np.zeros(g.n)
    for z in nb[s]:
        out[nb[z]] += weight[z]
    return out


def jaccard(g: SparseGraph, s: int, neighbors=None) -> np.ndarray:
    nb = _neighbor_sets(g, neighbors)
    gs = set(nb[s].tolist())
    out = np.zeros(g.n)
    for u in range(g.n):
        gu = set(nb[u].tolist())
        union = len(gs | gu)
        if union:
            out[u] = len(gs & gu) / union
    return out


def baseline_scores(g: SparseGraph, s: int, method: str, restart: float = 0.2,
                    cfg: IterationConfig | None = None, transition=None, neighbors=None) -> np.ndarray:
    """Per-node score of ``method`` w.r.t. seed ``s``."""
    method = method.upper()
    if method == "CN":
        return common_neighbors(g, s, neighbors)
    if method == "AA":
        return adamic_adar(g, s, neighbors)
    if method == "JC":
        return jaccard(g, s, neighbors)
    if method == "RWR":
        t = transition if transition is not None else row_normalize(g)
        return rwr_scores(t, restart, s, cfg).r
    raise ValueError(f"unknown baseline {method!r}; expected one of {METHODS}")
