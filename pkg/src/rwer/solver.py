"""Matrix-free solves of the adjoint system (I - B^T) x = p.

With B = Ã^T (I - diag(c)) + q (c - 1)^T the transpose applies as

    B^T x = (1 - c) * (Ã x) + (c - 1) * x[s]

so one product costs O(m).  Two backends: restarted GMRES and plain
fixed-point (Richardson) iteration x <- B^T x + p, which converges because the
spectral radius of B^T is at most 1 - min(c).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .engine import effective_restart
from .errors import DimensionError, NonConvergence
from .graph import TransitionMatrix

BACKENDS = ("gmres", "richardson")


@dataclass(frozen=True)
class SolveConfig:
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    gmres_restart: int = 50
    backend: str = "gmres"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.gmres_restart < 1:
            raise ValueError("gmres_restart must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")


class AdjointOperator:
    """The operator I - B^T for a fixed (graph, restart vector, seed)."""

    def __init__(self, t: TransitionMatrix, c, s: int):
        self.t = t
        self.c = effective_restart(t, c)
        self.s = int(s)
        if not 0 <= self.s < t.n:
            raise DimensionError(f"seed {s} out of range")
        self._keep = 1.0 - self.c

    @property
    def n(self) -> int:
        return self.t.n

    def apply_bt(self, x: np.ndarray) -> np.ndarray:
        """B^T x."""
        y = self._keep * (self.t.normalized @ x)
        y -= self._keep * x[self.s]
        return y

    def apply(self, x: np.ndarray) -> np.ndarray:
        """(I - B^T) x."""
        return x - self.apply_bt(x)

    def apply_primal(self, x: np.ndarray) -> np.ndarray:
        """(I - B) x, the operator whose inverse maps q to the score vector."""
        y = x - self.t.normalized_t @ (self._keep * x)
        y[self.s] += self._keep @ x
        return y

    def linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator((self.n, self.n), matvec=self.apply, dtype=np.float64)


def _residual(op: AdjointOperator, x, p, pnorm) -> float:
    d = p - op.apply(x)
    return float(np.sqrt(d @ d)) / pnorm


def _prepare(op: AdjointOperator, p_tilde):
    p = np.asarray(p_tilde, dtype=np.float64)
    if p.shape != (op.n,):
        raise DimensionError(f"right-hand side has shape {p.shape}, expected ({op.n},)")
    return p, float(np.sqrt(p @ p))


def _verify(op, x, p, pnorm, cfg, what):
    res = _residual(op, x, p, pnorm)
    if res > 10 * cfg.tolerance:
        raise NonConvergence(what, cfg.max_iterations, res)
    return x


def richardson_adjoint(op: AdjointOperator, p_tilde, cfg: SolveConfig | None = None) -> np.ndarray:
    """Fixed-point iteration x <- B^T x + p from x = 0.

    The residual p - (I - B^T) x equals the next update minus x, so checking
    it costs nothing extra.
    """
    cfg = cfg or SolveConfig(backend="richardson")
    p, pnorm = _prepare(op, p_tilde)
    if pnorm == 0.0:
        return np.zeros(op.n)
    x = np.zeros(op.n)
    res = np.inf
    for _ in range(cfg.max_iterations):
        y = op.apply_bt(x) + p
        d = y - x
        res = float(np.sqrt(d @ d)) / pnorm
        if res <= cfg.tolerance:
            return _verify(op, x, p, pnorm, cfg, "Richardson adjoint solve")
        x = y
    raise NonConvergence("Richardson adjoint solve", cfg.max_iterations, res)


def gmres(matvec, b, tol, restart=50, max_iterations=10_000, x0=None):
    """Restarted GMRES on a matrix-free operator.

    Stops when the true relative residual ||b - A x|| / ||b|| <= tol.  Arnoldi
    vectors are orthogonalized by classical Gram-Schmidt applied twice.
    Returns (x, relative residual, total inner iterations).
    """
    n = b.shape[0]
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if bnorm == 0.0:
        return x, 0.0, 0
    m = max(1, min(restart, n))
    total = 0
    while True:
        r = b - matvec(x)
        beta = float(np.linalg.norm(r))
        if beta / bnorm <= tol or total >= max_iterations:
            return x, beta / bnorm, total
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        for j in range(m):
            w = matvec(V[j])
            for _ in range(2):
                h = V[:j + 1] @ w
                w -= h @ V[:j + 1]
                H[:j + 1, j] += h
            H[j + 1, j] = np.linalg.norm(w)
            breakdown = H[j + 1, j] <= 1e-14 * beta
            if not breakdown:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                a, c_ = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * a + sn[i] * c_
                H[i + 1, j] = -sn[i] * a + cs[i] * c_
            denom = np.hypot(H[j, j], H[j + 1, j])
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            total += 1
            if breakdown or abs(g[k]) / bnorm <= tol or total >= max_iterations:
                break
        y = scipy.linalg.solve_triangular(H[:k, :k], g[:k])
        x = x + y @ V[:k]


def _gmres(op: AdjointOperator, p, pnorm, cfg: SolveConfig) -> np.ndarray:
    x, res, _ = gmres(op.apply, p, cfg.tolerance, cfg.gmres_restart, cfg.max_iterations)
    if res > 10 * cfg.tolerance:
        raise NonConvergence("GMRES adjoint solve", cfg.max_iterations, res)
    return x


def solve_adjoint(op: AdjointOperator, p_tilde, cfg: SolveConfig | None = None) -> np.ndarray:
    """Solve (I - B^T) x = p_tilde with the configured backend."""
    cfg = cfg or SolveConfig()
    p, pnorm = _prepare(op, p_tilde)
    if pnorm == 0.0:
        return np.zeros(op.n)
    if cfg.backend == "richardson":
        return richardson_adjoint(op, p, cfg)
    return _verify(op, _gmres(op, p, pnorm, cfg), p, pnorm, cfg, "GMRES adjoint solve")
