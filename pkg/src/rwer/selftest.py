"""Quick built-in checks on small synthetic graphs: oracle agreement and gradient accuracy."""

from __future__ import annotations

import numpy as np

from .engine import IterationConfig, closed_form_matrix, rwer_closed_form, rwer_power_iteration, rwr_scores
from .graph import from_edges, row_normalize
from .learn import LearnConfig, SupervisionInstance, build_p_tilde, finite_difference_gradient, gradient
from .solver import AdjointOperator, SolveConfig, solve_adjoint


def _graph(n, rng, out_degree=3):
    src = np.concatenate([np.repeat(np.arange(n), out_degree), np.arange(n), [0]])
    dst = np.concatenate([rng.integers(0, n, n * out_degree), (np.arange(n) + 1) % n, [0]])
    return row_normalize(from_edges(src, dst, rng.uniform(0.5, 2.0, src.size), n=n))


def check_oracle(rng, graphs=10):
    worst = 0.0
    for _ in range(graphs):
        n = int(rng.integers(5, 200))
        t = _graph(n, rng)
        c = rng.uniform(0.01, 0.99, n)
        s = int(rng.integers(n))
        worst = max(worst, np.abs(rwer_power_iteration(t, c, s).r - rwer_closed_form(t, c, s).r).sum())
    return worst <= 1e-8, f"max L1 gap {worst:.2e} (tol 1e-8)"


def check_uniform_restart(rng, graphs=5):
    worst = 0.0
    tight = IterationConfig(epsilon=1e-13)
    for _ in range(graphs):
        n = int(rng.integers(5, 100))
        t = _graph(n, rng)
        for k in (0.05, 0.15, 0.5, 0.85):
            q = np.zeros(n)
            q[0] = 1.0
            ref = np.linalg.solve(np.eye(n) - (1 - k) * t.dense().T, k * q)
            worst = max(worst, np.abs(rwr_scores(t, k, 0, tight).r - ref).sum())
    return worst <= 1e-10, f"max L1 gap {worst:.2e} (tol 1e-10)"


def check_gradient(rng, instances=3):
    worst = 0.0
    cfg = LearnConfig(b=0.01, origin=0.3, iteration=IterationConfig(epsilon=1e-13),
                      solve=SolveConfig(tolerance=1e-12))
    for _ in range(instances):
        n = int(rng.integers(10, 40))
        t = _graph(n, rng)
        nodes = rng.permutation(n)
        inst = SupervisionInstance(nodes[0], nodes[1:4], nodes[4:7])
        c = rng.uniform(0.05, 0.9, n)
        g = gradient(t, c, inst, cfg).gradient
        fd = finite_difference_gradient(t, c, inst, cfg)
        mask = np.abs(g) > 1e-8
        if mask.any():
            worst = max(worst, float((np.abs(g - fd)[mask] / np.abs(g[mask])).max()))
    return worst <= 1e-4, f"max relative error {worst:.2e} (tol 1e-4)"


def check_adjoint(rng, instances=3):
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(10, 100))
        t = _graph(n, rng)
        c = rng.uniform(0.05, 0.9, n)
        nodes = rng.permutation(n)
        inst = SupervisionInstance(nodes[0], nodes[1:4], nodes[4:7])
        p = build_p_tilde(inst, rng.random((3, 3)), n)
        ref = closed_form_matrix(t, c, inst.seed).T @ p
        op = AdjointOperator(t, c, inst.seed)
        for backend in ("gmres", "richardson"):
            x = solve_adjoint(op, p, SolveConfig(tolerance=1e-12, backend=backend))
            worst = max(worst, float(np.abs(x - ref).max()))
    return worst <= 1e-8, f"max Linf gap {worst:.2e} (tol 1e-8)"


CHECKS = {
    "power iteration vs dense solve": check_oracle,
    "uniform restart vs textbook RWR": check_uniform_restart,
    "adjoint solves vs dense": check_adjoint,
    "gradient vs finite differences": check_gradient,
}


def run_selftest(seed=0):
    """Run every check; returns a list of (name, passed, detail)."""
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check, not a crashed selftest
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
