import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwer.engine import rwr_scores
from rwer.evaluation import (
    auc,
    average_precision,
    baseline_scores,
    make_link_prediction_split,
    make_ranking_split,
    mean_average_precision,
    precision_at_k,
    rank,
)
from rwer.evaluation.experiment import ExperimentConfig, evaluate, run_experiment
from rwer.graph import from_edges, row_normalize

from conftest import two_communities


def undirected(edges, n=None):
    e = np.array(edges)
    return from_edges(np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]], n=n)


# brute-force oracles -----------------------------------------------------------

def brute_order(scores, candidates):
    return sorted(candidates, key=lambda v: (-scores[v], v))


def brute_ap(scores, candidates, relevant):
    order = brute_order(scores, candidates)
    hits, total = 0, 0.0
    for i, v in enumerate(order, 1):
        if v in relevant:
            hits += 1
            total += hits / i
    return total / len(relevant)


def brute_auc(scores, pos, neg):
    s = 0.0
    for p in pos:
        for n in neg:
            s += 1.0 if scores[p] > scores[n] else 0.5 if scores[p] == scores[n] else 0.0
    return s / (len(pos) * len(neg))


def brute_pk(scores, candidates, relevant, k):
    return sum(v in relevant for v in brute_order(scores, candidates)[:k]) / k


# metrics -------------------------------------------------------------------------

def test_ap_examples():
    scores = np.array([4.0, 3.0, 2.0, 1.0])
    assert average_precision(rank(scores), [0, 1]) == 1.0
    assert average_precision(rank(scores), [2]) == pytest.approx(1 / 3)
    assert average_precision(rank(scores), [0, 2]) == pytest.approx((1 + 2 / 3) / 2)
    assert average_precision(rank(scores), [0, 2]) == pytest.approx(0.8333, abs=1e-4)


def test_ap_errors():
    with pytest.raises(ValueError):
        average_precision(rank([1.0, 2.0]), [])
    with pytest.raises(ValueError):
        average_precision(rank([1.0, 2.0], [0]), [1])
    with pytest.raises(ValueError):
        mean_average_precision([])


def test_auc_examples():
    assert auc([3.0, 2.0, 1.0, 0.0], [0, 1], [2, 3]) == 1.0
    assert auc(np.ones(6), [0, 1, 2], [3, 4, 5]) == 0.5
    # p = (3, 1), n = (2,)
    assert auc([3.0, 1.0, 2.0], [0, 1], [2]) == 0.5
    with pytest.raises(ValueError):
        auc([1.0], [0], [])


def test_precision_at_k_examples():
    scores = np.arange(40, 0, -1.0)
    assert precision_at_k(rank(scores), range(0, 20, 2), 20) == 0.5
    assert precision_at_k(rank(scores), range(20), 20) == 1.0
    # list of 5, all relevant, k = 20: 15 empty slots count as misses
    assert precision_at_k(rank(scores[:5]), range(5), 20) == 0.25
    with pytest.raises(ValueError):
        precision_at_k(rank(scores), [0], 0)


def test_rank_ties_by_ascending_id():
    r = rank([1.0, 2.0, 1.0, 2.0, 0.5], candidates=[4, 3, 2, 1, 0])
    assert r.nodes.tolist() == [1, 3, 0, 2, 4]
    assert r.scores.tolist() == [2.0, 2.0, 1.0, 1.0, 0.5]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_metrics_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    # few distinct values so ties are common
    scores = rng.integers(0, 6, n).astype(float) if rng.random() < 0.5 else rng.random(n)
    cand = sorted(rng.choice(n, size=int(rng.integers(2, n + 1)), replace=False).tolist())
    rel = set(rng.choice(cand, size=int(rng.integers(1, len(cand))), replace=False).tolist())
    neg = [v for v in cand if v not in rel]
    k = int(rng.integers(1, 25))
    ranked = rank(scores, cand)
    assert ranked.nodes.tolist() == brute_order(scores, cand)
    assert average_precision(ranked, rel) == pytest.approx(brute_ap(scores, cand, rel), abs=1e-12)
    assert auc(scores, sorted(rel), neg) == brute_auc(scores, rel, neg)
    assert precision_at_k(ranked, rel, k) == brute_pk(scores, cand, rel, k)


# baselines -----------------------------------------------------------------------

def test_adamic_adar_triangle():
    g = undirected([(0, 1), (1, 2), (0, 2)])
    assert baseline_scores(g, 0, "AA")[2] == pytest.approx(1 / math.log(2))
    assert baseline_scores(g, 0, "CN")[2] == 1.0


def test_disjoint_neighborhoods_score_zero():
    g = undirected([(0, 1), (2, 3)])
    for m in ("CN", "AA", "JC"):
        assert baseline_scores(g, 0, m)[2] == 0.0


def test_jaccard_equal_neighborhoods():
    g = undirected([(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)])
    assert baseline_scores(g, 0, "JC")[1] == 1.0
    assert baseline_scores(g, 0, "CN")[1] == 3.0


def test_aa_skips_degree_one_neighbors():
    # the seed shares all its neighbors with itself; leaf 1 has degree 1 and adds nothing
    g = undirected([(0, 1), (0, 2), (2, 3)])
    aa = baseline_scores(g, 0, "AA")
    assert aa[0] == pytest.approx(1 / math.log(2))
    assert np.all(np.isfinite(aa))


def test_baselines_use_undirected_view():
    g = from_edges([0, 2], [1, 1])  # 0 -> 1 <- 2
    assert baseline_scores(g, 0, "CN")[2] == 1.0


def test_rwr_baseline_delegates():
    g, _ = two_communities(np.random.default_rng(1))
    t = row_normalize(g)
    np.testing.assert_array_equal(baseline_scores(g, 3, "rwr", restart=0.3), rwr_scores(t, 0.3, 3).r)
    with pytest.raises(ValueError):
        baseline_scores(g, 0, "katz")


# splits -----------------------------------------------------------------------

def edge_set(g):
    coo = g.adjacency.tocoo()
    return set(zip(coo.row.tolist(), coo.col.tolist()))


@pytest.mark.parametrize("seed", range(5))
def test_link_prediction_split_invariants(seed):
    g, _ = two_communities(np.random.default_rng(seed))
    sp = make_link_prediction_split(g, 0.3, 5, seed, num_queries=8)
    full, train = edge_set(g), edge_set(sp.train_graph)
    assert train <= full
    assert sp.queries
    nb = g.undirected_neighbors()
    for q in sp.queries:
        s = q.query
        for v in q.held_out.tolist():
            assert (s, v) in full and (s, v) not in train and (v, s) not in train
        assert not set(q.test_negatives.tolist()) & set(nb[s].tolist())
        assert not set(q.train_negatives.tolist()) & set(nb[s].tolist())
        assert not set(q.train_negatives.tolist()) & set(q.test_negatives.tolist())
        assert s not in q.candidates
        assert set(q.held_out.tolist()) <= set(q.candidates.tolist())
        assert set(q.test_negatives.tolist()) <= set(q.candidates.tolist())
        assert all((s, v) in train for v in q.train_positives.tolist())


def test_link_prediction_split_deterministic():
    g, _ = two_communities(np.random.default_rng(0))
    a = make_link_prediction_split(g, 0.3, 5, 99, num_queries=6)
    b = make_link_prediction_split(g, 0.3, 5, 99, num_queries=6)
    assert edge_set(a.train_graph) == edge_set(b.train_graph)
    for x, y in zip(a.queries, b.queries):
        for f in ("query", "held_out", "test_negatives", "train_negatives", "candidates"):
            assert np.array_equal(getattr(x, f), getattr(y, f))


def test_low_degree_queries_skipped():
    # node 0 has a single out-edge; 3 and 4 are the non-neighbors of 1
    g = from_edges([0, 1, 1, 2, 3, 4], [1, 0, 2, 1, 4, 3])
    sp = make_link_prediction_split(g, 0.5, 1, 0, queries=[0, 1])
    assert sp.skipped == [0]
    assert [q.query for q in sp.queries] == [1]
    with pytest.raises(ValueError):
        make_link_prediction_split(g, 1.0, 1, 0)


def test_ranking_split_invariants():
    g, cls = two_communities(np.random.default_rng(4))
    sp = make_ranking_split(g, cls, 3, 3, 4, num_queries=5)
    assert len(sp.queries) == 5
    for q in sp.queries:
        s = q.query
        assert np.all(cls[q.train_positives] == cls[s]) and np.all(cls[q.held_out] == cls[s])
        assert np.all(cls[q.train_negatives] != cls[s]) and np.all(cls[q.test_negatives] != cls[s])
        excluded = {s} | set(q.train_positives.tolist()) | set(q.train_negatives.tolist())
        assert not excluded & set(q.candidates.tolist())
        assert len(q.held_out) + len(q.test_negatives) == len(q.candidates)


# experiment -----------------------------------------------------------------------

@pytest.fixture
def experiment_files(tmp_path):
    g, cls = two_communities(np.random.default_rng(3))
    coo = g.adjacency.tocoo()
    (tmp_path / "g.txt").write_text("".join(f"v{i} v{j}\n" for i, j in zip(coo.row, coo.col)))
    (tmp_path / "cls.txt").write_text("".join(f"v{i} {c}\n" for i, c in enumerate(cls)))
    return tmp_path


@pytest.mark.parametrize("task", ["link_prediction", "ranking"])
def test_run_experiment_writes_report(experiment_files, task):
    d = experiment_files
    cfg = {"graph": "g.txt", "labels": "cls.txt", "task": task, "num_queries": 3,
           "negatives_per_query": 4, "methods": ["SURE", "RWR", "CN"], "learn": {"b": 0.01}}
    (d / "cfg.json").write_text(json.dumps(cfg))
    manifest = run_experiment(d / "cfg.json", d / "out")
    lines = (d / "out" / "metrics.tsv").read_text().splitlines()
    assert lines[0].split("\t") == ["method", "MAP", "AUC", "P@20", "queries"]
    assert [ln.split("\t")[0] for ln in lines[1:]] == ["SURE", "RWR", "CN"]
    for ln in lines[1:]:
        vals = [float(v) for v in ln.split("\t")[1:4]]
        assert all(0.0 <= v <= 1.0 for v in vals)
    assert manifest["learn"]["b"] == 0.01
    assert manifest["rng_seed"] == 0 and "versions" in manifest

    # the manifest is a config: rerunning it reproduces both files byte for byte
    run_experiment(d / "out" / "manifest.json", d / "again")
    for f in ("metrics.tsv", "manifest.json"):
        assert (d / "out" / f).read_bytes() == (d / "again" / f).read_bytes()


def test_threads_do_not_change_results(experiment_files):
    base = dict(graph=str(experiment_files / "g.txt"), num_queries=4, negatives_per_query=4,
                methods=["SURE-F", "RWR", "AA", "JC"], learn={"b": 0.01})
    one, recs1, _ = evaluate(ExperimentConfig(**base))
    two, recs2, _ = evaluate(ExperimentConfig(**base, threads=3))
    assert one == two and recs1 == recs2


def test_experiment_config_validation(experiment_files):
    with pytest.raises(ValueError):
        ExperimentConfig(graph="x", methods=["PPR"])
    with pytest.raises(ValueError):
        ExperimentConfig(graph="x", task="ranking")
    with pytest.raises(ValueError):
        ExperimentConfig(graph="x", learn={"beta": 1})
