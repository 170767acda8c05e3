"""Desk-scale timing of scoring iterations and learning epochs versus edge count."""

from __future__ import annotations

import time

import numpy as np

from .engine import effective_restart, rwer_step
from .graph import SparseGraph, from_edges, row_normalize
from .learn import LearnConfig, SupervisionInstance, gradient


def random_graph(n: int, out_degree: int, rng) -> SparseGraph:
    """Random digraph with a Hamiltonian ring (strongly connected), about n * (out_degree + 1) edges."""
    src = np.concatenate([np.repeat(np.arange(n), out_degree), np.arange(n)])
    dst = np.concatenate([rng.integers(0, n, n * out_degree), (np.arange(n) + 1) % n])
    return from_edges(src, dst, n=n)


def subsample_edges(g: SparseGraph, fraction: float, rng) -> SparseGraph:
    coo = g.adjacency.tocoo()
    keep = rng.random(coo.nnz) < fraction
    return from_edges(coo.row[keep], coo.col[keep], coo.data[keep], n=g.n, labels=g.labels)


def seconds_per_iteration(t, restart=0.2, iterations=30, repeats=5) -> float:
    """Best-of-``repeats`` wall time of one power-iteration update."""
    c = effective_restart(t, restart)
    best = np.inf
    for _ in range(repeats):
        r = np.zeros(t.n)
        r[0] = 1.0
        t0 = time.perf_counter()
        for _ in range(iterations):
            r = rwer_step(t, c, 0, r)
        best = min(best, (time.perf_counter() - t0) / iterations)
    return best


def _bench_instance(t, rng, k=5):
    live = np.flatnonzero(~t.dangling)
    nodes = rng.choice(live, size=2 * k + 1, replace=False)
    return SupervisionInstance(nodes[0], nodes[1:k + 1], nodes[k + 1:])


def seconds_per_epoch(t, inst=None, cfg=None, repeats=3, rng=None) -> float:
    """Best-of-``repeats`` wall time of one gradient evaluation from a cold start.

    That is the work of one learning epoch: a forward solve for r and an
    adjoint solve for the pair term.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    inst = inst or _bench_instance(t, rng)
    cfg = cfg or LearnConfig(b=0.01)
    c = cfg.origin_vector(t)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        gradient(t, c, inst, cfg)
        best = min(best, time.perf_counter() - t0)
    return best


def scaling_rows(graphs, rounds=15, seed=0):
    """Time every graph; returns one dict row per graph.

    Measurements are interleaved across graphs for ``rounds`` rounds and the
    best time per graph is kept, so background load hits all sizes alike.
    """
    ts = [row_normalize(g) for g in graphs]
    insts = [_bench_instance(t, np.random.default_rng(seed)) for t in ts]
    it_best = [np.inf] * len(ts)
    ep_best = [np.inf] * len(ts)
    for k in range(rounds):
        for i, t in enumerate(ts):
            it_best[i] = min(it_best[i], seconds_per_iteration(t, iterations=100, repeats=1))
            if k < max(3, rounds // 3):
                ep_best[i] = min(ep_best[i], seconds_per_epoch(t, insts[i], repeats=1))
    return [
        {"n": g.n, "m": g.m, "sec_per_iteration": a, "sec_per_epoch": b}
        for g, a, b in zip(graphs, it_best, ep_best)
    ]


def loglog_slope(rows, key):
    m = np.log([row["m"] for row in rows])
    y = np.log([row[key] for row in rows])
    return float(np.polyfit(m, y, 1)[0])
