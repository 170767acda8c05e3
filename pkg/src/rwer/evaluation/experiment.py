"""End-to-end evaluation: split, learn per query, score baselines, aggregate metrics.

The config is a flat JSON object; see ``ExperimentConfig`` for the keys.  The
report is a TSV metrics table plus a JSON manifest holding the fully
resolved config, per-query numbers and software versions.  The manifest is
itself a valid config, so ``run_experiment(manifest)`` reproduces the run.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from ..engine import rwr_scores
from ..graph import SparseGraph, load_edge_list, row_normalize
from ..learn import LearnConfig, SupervisionInstance, learn_config_from_dict, learn_config_to_dict, sure_learn
from .baselines import baseline_scores
from .metrics import auc, average_precision, precision_at_k, rank
from .split import EvalSplit, QuerySplit, make_link_prediction_split, make_ranking_split

log = logging.getLogger(__name__)

LEARNED = {"SURE": "sure", "SURE-F": "sure_fast"}
ALL_METHODS = ("SURE", "SURE-F", "RWR", "CN", "AA", "JC")


@dataclass
class ExperimentConfig:
    graph: str
    task: str = "link_prediction"  # or "ranking"
    labels: str | None = None  # ranking: "node<ws>class" per line
    queries: list | None = None  # node labels; default is a seeded sample
    num_queries: int | None = 10
    holdout_fraction: float = 0.3
    negatives_per_query: int = 20
    train_negatives: int | None = None
    train_positives: int = 3  # ranking only
    methods: list = field(default_factory=lambda: ["SURE", "RWR", "CN", "AA", "JC"])
    learn: dict = field(default_factory=dict)
    rwr_restart: float = 0.2
    k: int = 20
    rng_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.task not in ("link_prediction", "ranking"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "ranking" and not self.labels:
            raise ValueError("the ranking task needs a labels file")
        bad = [m for m in self.methods if m.upper() not in ALL_METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}; choose from {ALL_METHODS}")
        self.methods = [m.upper() for m in self.methods]
        if self.k < 1 or self.threads < 1:
            raise ValueError("k and threads must be >= 1")
        self.learn_config()  # validate overrides early

    def learn_config(self, variant="sure") -> LearnConfig:
        return learn_config_from_dict({**self.learn, "variant": variant})

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        d = {k: v for k, v in d.items() if k in names}  # manifests carry extra keys
        cfg = cls(**d)
        if base_dir is not None:
            cfg.graph = str((Path(base_dir) / cfg.graph).resolve())
            if cfg.labels:
                cfg.labels = str((Path(base_dir) / cfg.labels).resolve())
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path) as fh:
            return cls.from_dict(json.load(fh), base_dir=path.parent)

    def resolved(self) -> dict:
        d = asdict(self)
        lc = learn_config_to_dict(self.learn_config())
        lc.pop("variant")
        d["learn"] = lc
        return d


def read_classes(path, g: SparseGraph) -> np.ndarray:
    """Map a "label class" file onto node ids; every node needs a class."""
    classes = [None] * g.n
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node class'")
            try:
                classes[g.node_id(parts[0])] = parts[1]
            except KeyError:
                raise ValueError(f"{path}:{lineno}: unknown node {parts[0]!r}") from None
    missing = [g.labels[i] for i, c in enumerate(classes) if c is None]
    if missing:
        raise ValueError(f"no class for nodes {missing[:5]}")
    return np.array(classes)


def make_split(cfg: ExperimentConfig, g: SparseGraph) -> EvalSplit:
    queries = None if cfg.queries is None else [g.node_id(str(q)) for q in cfg.queries]
    if cfg.task == "ranking":
        classes = read_classes(cfg.labels, g)
        n_neg = cfg.train_negatives if cfg.train_negatives is not None else cfg.train_positives
        return make_ranking_split(g, classes, cfg.train_positives, n_neg, cfg.rng_seed,
                                  queries=queries, num_queries=cfg.num_queries)
    return make_link_prediction_split(g, cfg.holdout_fraction, cfg.negatives_per_query, cfg.rng_seed,
                                      queries=queries, num_queries=cfg.num_queries,
                                      train_negatives=cfg.train_negatives)


def query_scores(cfg: ExperimentConfig, split: EvalSplit, q: QuerySplit, t=None, neighbors=None) -> dict:
    """Score vector of every configured method for one query on the train graph."""
    g = split.train_graph
    t = t if t is not None else row_normalize(g)
    out = {}
    for m in cfg.methods:
        if m in LEARNED:
            inst = SupervisionInstance(q.query, q.train_positives, q.train_negatives)
            out[m] = sure_learn(t, inst, cfg.learn_config(LEARNED[m])).r.r
        elif m == "RWR":
            out[m] = rwr_scores(t, cfg.rwr_restart, q.query, cfg.learn_config().iteration).r
        else:
            out[m] = baseline_scores(g, q.query, m, neighbors=neighbors)
    return out


def query_metrics(scores, q: QuerySplit, k: int) -> dict:
    ranked = rank(scores, q.candidates)
    return {
        "AP": average_precision(ranked, q.held_out),
        "AUC": auc(scores, q.held_out, q.test_negatives),
        f"P@{k}": precision_at_k(ranked, q.held_out, k),
    }


def _evaluate_query(cfg, split, t, neighbors, q):
    scores = query_scores(cfg, split, q, t, neighbors)
    return {m: query_metrics(s, q, cfg.k) for m, s in scores.items()}


def evaluate(cfg: ExperimentConfig, g: SparseGraph | None = None):
    """Run the experiment in memory; returns (summary rows, per-query records, split)."""
    g = g if g is not None else load_edge_list(cfg.graph)
    split = make_split(cfg, g)
    if not split.queries:
        raise ValueError("no usable queries after splitting")
    t = row_normalize(split.train_graph)
    neighbors = split.train_graph.undirected_neighbors()

    def work(q):
        return _evaluate_query(cfg, split, t, neighbors, q)

    # map() keeps query order, so results do not depend on thread scheduling
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            per_query = list(pool.map(work, split.queries))
    else:
        per_query = [work(q) for q in split.queries]

    records = [
        {"query": g.labels[q.query], "method": m, **vals}
        for q, res in zip(split.queries, per_query)
        for m, vals in res.items()
    ]
    rows = []
    pk = f"P@{cfg.k}"
    for m in cfg.methods:
        mine = [r for r in records if r["method"] == m]
        rows.append({
            "method": m,
            "MAP": float(np.mean([r["AP"] for r in mine])),
            "AUC": float(np.mean([r["AUC"] for r in mine])),
            pk: float(np.mean([r[pk] for r in mine])),
            "queries": len(mine),
        })
    return rows, records, split


def write_metrics_tsv(rows, path, k=20):
    cols = ["method", "MAP", "AUC", f"P@{k}", "queries"]
    with open(path, "w") as fh:
        fh.write("\t".join(cols) + "\n")
        for r in rows:
            fh.write("\t".join(r[c] if c == "method" else f"{r[c]:.17g}" for c in cols) + "\n")


def software_versions() -> dict:
    from .. import __version__
    return {"rwer": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def run_experiment(config, out_dir) -> dict:
    """Run from a config path, dict or ExperimentConfig and write metrics.tsv and manifest.json."""
    if isinstance(config, ExperimentConfig):
        cfg = config
    elif isinstance(config, dict):
        cfg = ExperimentConfig.from_dict(config)
    else:
        cfg = ExperimentConfig.load(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, records, split = evaluate(cfg)
    write_metrics_tsv(rows, out / "metrics.tsv", cfg.k)
    g = split.train_graph
    manifest = {
        **cfg.resolved(),
        "command": "evaluate",
        "versions": software_versions(),
        "selected_queries": [g.labels[q.query] for q in split.queries],
        "skipped_queries": [g.labels[s] for s in split.skipped],
        "summary": rows,
        "per_query": records,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", out / "metrics.tsv")
    return manifest
