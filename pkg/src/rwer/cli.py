"""Command-line entry point: ``rwer score | learn | evaluate | bench | selftest``.

Options resolve as command-line flag, then ``--config`` JSON file, then
built-in default.  Every run that writes output also writes a JSON manifest
with the resolved options; passing that manifest back as ``--config``
reproduces the run.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .engine import C_MAX, C_MIN, IterationConfig, restart_vector, rwer_power_iteration
from .errors import DimensionError, GraphFormatError, NumericalError
from .evaluation.experiment import ExperimentConfig, run_experiment, software_versions
from .evaluation.metrics import auc
from .graph import SparseGraph, load_edge_list, row_normalize, write_label_map
from .learn import LearnConfig, SupervisionInstance, learn_config_from_dict, learn_config_to_dict, sure_learn

log = logging.getLogger("rwer")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_LEARN_DEFAULTS = learn_config_to_dict(LearnConfig())

DEFAULTS = {
    "score": {"restart": 0.2, "restart_vector": None, "epsilon": 1e-9, "max_iters": 10_000,
              "norm": "l1", "threads": 1},
    "learn": {**{k: _LEARN_DEFAULTS[k] for k in (
        "b", "lam", "origin", "eta", "max_epochs", "grad_tol", "step_tol", "safeguard",
        "max_halvings", "epsilon", "solve_tolerance", "gmres_restart")},
        "variant": "sure", "threads": 1},
    "evaluate": {"threads": None},
    "bench": {"graph": None, "edges": None, "repeat": 5, "out_degree": 9, "rng_seed": 0,
              "fractions": [0.5, 1.0]},
}
REQUIRED = {
    "score": ("graph", "seed", "out"),
    "learn": ("graph", "seed", "positives", "negatives", "out"),
    "evaluate": ("out",),
    "bench": (),
}
PATH_KEYS = ("graph", "restart_vector", "positives", "negatives", "out")


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwer", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"rwer {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    # default=None everywhere so that unset flags fall through to the config file
    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="JSON file of options (a previous manifest works)")
            sp.add_argument("--threads", type=int, help="worker threads (default 1)")
        # also accepted after the subcommand; SUPPRESS keeps the top-level count
        sp.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    s = sub.add_parser("score", help="RWER scores of every node for one seed")
    s.add_argument("--graph", help="edge list: 'src dst [weight]' per line, optionally gzipped")
    s.add_argument("--seed", help="label of the seed node")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--restart", type=float, help="same restart probability for every node")
    g.add_argument("--restart-vector", help="file of restart probabilities: 'value' or 'label value' per line")
    s.add_argument("--epsilon", type=float, help="stop when the residual drops below this")
    s.add_argument("--max-iters", type=int)
    s.add_argument("--norm", choices=["l1", "l2", "linf"])
    s.add_argument("--out", help="ranked TSV output path")
    common(s)

    lp = sub.add_parser("learn", help="learn a restart vector from positive and negative nodes")
    lp.add_argument("--graph")
    lp.add_argument("--seed")
    lp.add_argument("--positives", help="file with one node label per line")
    lp.add_argument("--negatives", help="file with one node label per line")
    lp.add_argument("--variant", choices=["sure", "sure-fast", "sure_fast"])
    lp.add_argument("--b", type=float, help="sharpness of the logistic pair loss")
    lp.add_argument("--lam", type=float, help="weight of the pull towards the origin")
    lp.add_argument("--origin", type=float, help="origin restart probability, also the start point")
    lp.add_argument("--eta", type=float, help="learning rate")
    lp.add_argument("--max-epochs", type=int)
    lp.add_argument("--grad-tol", type=float)
    lp.add_argument("--step-tol", type=float)
    lp.add_argument("--safeguard", action=argparse.BooleanOptionalAction,
                    help="halve the step when the loss would increase")
    lp.add_argument("--max-halvings", type=int)
    lp.add_argument("--epsilon", type=float, help="forward solve tolerance")
    lp.add_argument("--solve-tolerance", type=float, help="adjoint solve tolerance")
    lp.add_argument("--gmres-restart", type=int)
    lp.add_argument("--out", help="learned restart vector TSV")
    common(lp)

    e = sub.add_parser("evaluate", help="run an experiment described by a JSON config")
    e.add_argument("--out", help="output directory for metrics.tsv and manifest.json")
    common(e)

    b = sub.add_parser("bench", help="time scoring iterations and learning epochs against edge count")
    src = b.add_mutually_exclusive_group()
    src.add_argument("--graph", help="time edge subsamples of this graph")
    src.add_argument("--edges", type=int, nargs="+", help="time random graphs with about these edge counts")
    b.add_argument("--fractions", type=float, nargs="+", help="edge fractions kept with --graph")
    b.add_argument("--out-degree", type=int)
    b.add_argument("--repeat", type=int, help="timing rounds; the best time is kept")
    b.add_argument("--rng-seed", type=int)
    b.add_argument("--out", help="TSV output (default stdout)")
    common(b)

    st = sub.add_parser("selftest", help="run built-in oracle and gradient checks")
    st.add_argument("--rng-seed", type=int, default=0)
    common(st, config=False)
    return p


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults."""
    cmd = args.command
    opts = dict(DEFAULTS.get(cmd, {}))
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(cfg, dict):
            raise UsageError(f"{path}: expected a JSON object")
        if cmd == "evaluate":
            opts["experiment"] = cfg
            opts["config_dir"] = str(path.parent)
            cfg = {k: cfg[k] for k in ("out",) if k in cfg}
        for k in PATH_KEYS:
            if isinstance(cfg.get(k), str):
                cfg[k] = str((path.parent / cfg[k]).resolve())
        known = set(opts) | set(REQUIRED[cmd]) | {"out"}
        opts.update({k: v for k, v in cfg.items() if k in known})
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k not in ("command", "config", "verbose")}
    opts.update(flags)
    # the two restart flags are alternatives; a flag beats the other one from the config
    if "restart" in flags:
        opts["restart_vector"] = None
    elif flags.get("restart_vector"):
        opts["restart"] = None
    if cmd == "evaluate" and "experiment" not in opts:
        raise UsageError("evaluate needs --config")
    missing = [k for k in REQUIRED[cmd] if opts.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return opts


# --- helpers -------------------------------------------------------------------

def _node(g: SparseGraph, label) -> int:
    try:
        return g.node_id(label)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def read_node_list(path, g: SparseGraph) -> list:
    nodes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                nodes.append(_node(g, line))
    return nodes


def read_restart_vector(path, g: SparseGraph) -> np.ndarray:
    """One value per line in node-id order, or 'label value' lines covering every node."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append((lineno, line.split()))
    widths = {len(r) for _, r in rows}
    if widths - {1, 2} or len(widths) > 1:
        raise UsageError(f"{path}: use either 'value' or 'label value' on every line")
    try:
        if widths == {2}:
            c = np.full(g.n, np.nan)
            for lineno, (lab, val) in rows:
                c[_node(g, lab)] = float(val)
            if len(rows) != g.n or np.isnan(c).any():
                raise DimensionError(f"restart vector covers {len(rows)} entries, graph has {g.n} nodes")
            return c
        return np.array([float(r[0]) for _, r in rows])
    except ValueError as exc:
        if isinstance(exc, DimensionError):
            raise
        raise UsageError(f"{path}: {exc}") from None


def _stem(out: Path) -> Path:
    return out.with_suffix("") if out.suffix else out


def _write_manifest(path: Path, command: str, opts: dict, result: dict):
    manifest = {"command": command, **{k: v for k, v in opts.items() if k != "command"},
                "versions": software_versions(), "result": result}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _abs(opts, keys=PATH_KEYS):
    for k in keys:
        if opts.get(k):
            opts[k] = str(Path(opts[k]).resolve())
    return opts


# --- subcommands ---------------------------------------------------------------

def cmd_score(opts: dict) -> int:
    opts = _abs(opts)
    g = load_edge_list(opts["graph"])
    t = row_normalize(g)
    s = _node(g, opts["seed"])
    if opts.get("restart_vector"):
        opts["restart"] = None
        raw = read_restart_vector(opts["restart_vector"], g)
    else:
        raw = opts["restart"]
    try:
        c = restart_vector(raw, t, C_MIN, C_MAX)
    except DimensionError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = IterationConfig(epsilon=opts["epsilon"], max_iterations=opts["max_iters"], norm=opts["norm"])
    sv = rwer_power_iteration(t, c, s, cfg)

    out = Path(opts["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    order = np.lexsort((np.arange(g.n), -sv.r))
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for i in order:
            fh.write(f"{g.labels[i]}\t{sv.r[i]:.17g}\n")
    stem = _stem(out)
    write_label_map(g, f"{stem}.labels.tsv")
    _write_manifest(Path(f"{stem}.manifest.json"), "score", opts,
                    {"iterations": sv.iterations, "residual": sv.residual, "n": g.n, "m": g.m})
    log.info("converged in %d iterations, residual %.3e", sv.iterations, sv.residual)
    return EXIT_OK


def cmd_learn(opts: dict) -> int:
    opts = _abs(opts)
    opts["variant"] = opts["variant"].replace("-", "_")
    g = load_edge_list(opts["graph"])
    t = row_normalize(g)
    s = _node(g, opts["seed"])
    pos = read_node_list(opts["positives"], g)
    neg = read_node_list(opts["negatives"], g)
    keys = set(DEFAULTS["learn"]) - {"threads"}
    try:
        inst = SupervisionInstance(s, pos, neg)
        cfg = learn_config_from_dict({k: opts[k] for k in keys})
        cfg.origin_vector(t)
    except DimensionError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = sure_learn(t, inst, cfg)

    out = Path(opts["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(g.n):
            fh.write(f"{g.labels[i]}\t{res.c[i]:.17g}\n")
    stem = _stem(out)
    with open(f"{stem}.trace.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,loss,step_size,forward_iterations\n")
        steps = [None] + res.step_sizes
        for k, loss in enumerate(res.trace):
            step = "" if steps[k] is None else f"{steps[k]:.17g}"
            fh.write(f"{k},{loss:.17g},{step},{res.forward_iterations[k]}\n")
    _write_manifest(Path(f"{stem}.manifest.json"), "learn", opts, {
        "epochs": res.epochs,
        "stop_reason": res.stop_reason,
        "initial_loss": res.trace[0],
        "final_loss": res.trace[-1],
        "training_auc": auc(res.r.r, inst.positives, inst.negatives),
        "loss_trace": res.trace,
        "forward_iterations": res.forward_iterations,
        "forward_residuals": res.forward_residuals,
    })
    log.info("%d epochs, stopped on %s, loss %.6g -> %.6g",
             res.epochs, res.stop_reason, res.trace[0], res.trace[-1])
    return EXIT_OK


def cmd_evaluate(opts: dict) -> int:
    exp = dict(opts["experiment"])
    if opts.get("threads") is not None:
        exp["threads"] = opts["threads"]
    try:
        cfg = ExperimentConfig.from_dict(exp, base_dir=opts["config_dir"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad experiment config: {exc}") from None
    run_experiment(cfg, opts["out"])
    sys.stdout.write((Path(opts["out"]) / "metrics.tsv").read_text())
    return EXIT_OK


def cmd_bench(opts: dict) -> int:
    from .bench import loglog_slope, random_graph, scaling_rows, subsample_edges

    rng = np.random.default_rng(opts["rng_seed"])
    if opts.get("graph"):
        full = load_edge_list(opts["graph"])
        graphs = [full if f >= 1.0 else subsample_edges(full, f, rng) for f in opts["fractions"]]
    else:
        edges = opts.get("edges") or [100_000, 200_000]
        d = opts["out_degree"]
        graphs = [random_graph(max(2, m // (d + 1)), d, rng) for m in edges]
    rows = scaling_rows(graphs, rounds=opts["repeat"], seed=opts["rng_seed"])
    lines = ["n\tm\tsec_per_iteration\tsec_per_epoch"]
    lines += [f"{r['n']}\t{r['m']}\t{r['sec_per_iteration']:.6g}\t{r['sec_per_epoch']:.6g}" for r in rows]
    if len(rows) > 1:
        for key in ("sec_per_iteration", "sec_per_epoch"):
            lines.append(f"# {key}: ratio last/first {rows[-1][key] / rows[0][key]:.3f}, "
                         f"log-log slope {loglog_slope(rows, key):.3f}")
    text = "\n".join(lines) + "\n"
    if opts.get("out"):
        Path(opts["out"]).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_selftest(opts: dict) -> int:
    from .selftest import run_selftest

    results = run_selftest(opts.get("rng_seed", 0))
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERICAL


COMMANDS = {"score": cmd_score, "learn": cmd_learn, "evaluate": cmd_evaluate,
            "bench": cmd_bench, "selftest": cmd_selftest}


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)  # exits with 2 on unknown flags
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args) if args.command != "selftest" else vars(args)
        if opts.get("threads") is not None and opts["threads"] < 1:
            raise UsageError("--threads must be >= 1")
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        parser.error(f"{args.command}: {exc}")  # exits with 2
    except NumericalError as exc:
        print(f"rwer: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (GraphFormatError, OSError) as exc:
        print(f"rwer: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # DimensionError and other invalid input
        print(f"rwer: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
