"""RWER scores: power iteration, the dense closed-form oracle, and RWR as a special case.

The fixed point solved here is

    r = Ã^T (I - diag(c)) r + (c^T r) q

with q the indicator of the seed.  Dangling nodes have empty rows in Ã and
their restart probability is forced to 1, so the walk always restarts there
and r stays a probability vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DenseLimitExceeded, DimensionError, NonConvergence, NumericalError, SingularMatrix
from .graph import TransitionMatrix

C_MIN = 1e-3
C_MAX = 1.0 - 1e-3
DENSE_LIMIT = 2000

_NORMS = {
    "l1": lambda d: float(np.abs(d).sum()),
    "l2": lambda d: float(np.sqrt(d @ d)),
    "linf": lambda d: float(np.abs(d).max(initial=0.0)),
}


@dataclass(frozen=True)
class IterationConfig:
    epsilon: float = 1e-9
    max_iterations: int = 10_000
    norm: str = "l1"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.norm not in _NORMS:
            raise ValueError(f"norm must be one of {sorted(_NORMS)}")


@dataclass
class ScoreVector:
    r: np.ndarray
    seed: int
    residual: float = 0.0
    iterations: int = 0
    residuals: list = field(default_factory=list, repr=False)


def restart_vector(values, t: TransitionMatrix, c_min=C_MIN, c_max=C_MAX) -> np.ndarray:
    """Validate a restart vector against [c_min, c_max] and pin dangling entries to 1.

    Scalars are broadcast.  Entries at dangling nodes are not bounds-checked
    since they are overwritten.
    """
    c = np.asarray(values, dtype=np.float64)
    if c.ndim == 0:
        c = np.full(t.n, float(c))
    if c.shape != (t.n,):
        raise DimensionError(f"restart vector has length {c.size}, graph has {t.n} nodes")
    live = c[~t.dangling]
    if not np.all(np.isfinite(live)) or np.any(live < c_min) or np.any(live > c_max):
        bad = live[~((live >= c_min) & (live <= c_max))]
        raise ValueError(
            f"restart probabilities must lie in [{c_min}, {c_max}]; got e.g. {float(bad[0])!r}"
        )
    c = c.copy()
    c[t.dangling] = 1.0
    return c


def effective_restart(t: TransitionMatrix, c) -> np.ndarray:
    """Restart vector actually used by the walk: checked in [0, 1], dangling pinned to 1."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim == 0:
        c = np.full(t.n, float(c))
    if c.shape != (t.n,):
        raise DimensionError(f"restart vector has length {c.size}, graph has {t.n} nodes")
    if not np.all((c >= 0.0) & (c <= 1.0)):
        raise ValueError("restart probabilities must lie in [0, 1]")
    if t.dangling.any():
        c = c.copy()
        c[t.dangling] = 1.0
    return c


def _check_seed(t: TransitionMatrix, s) -> int:
    s = int(s)
    if not 0 <= s < t.n:
        raise DimensionError(f"seed {s} out of range for {t.n} nodes")
    return s


def _finish(r: np.ndarray) -> np.ndarray:
    # tiny negatives from roundoff are clamped; anything else is a solver bug
    if r.min(initial=0.0) < -1e-15:
        raise NumericalError(f"score vector has negative entry {r.min():.3e}")
    r[r < 0.0] = 0.0
    total = r.sum()
    if abs(total - 1.0) > 1e-9:
        raise NumericalError(f"score vector sums to {total!r}, expected 1")
    return r


def rwer_step(t: TransitionMatrix, c: np.ndarray, s: int, r: np.ndarray) -> np.ndarray:
    """One update r' = Ã^T((1 - c) * r) + (c . r) q; ``c`` must already be effective."""
    r_new = t.normalized_t @ ((1.0 - c) * r)
    r_new[s] += c @ r
    return r_new


def rwer_power_iteration(
    t: TransitionMatrix,
    c,
    s: int,
    cfg: IterationConfig | None = None,
    r0: np.ndarray | None = None,
) -> ScoreVector:
    """Iterate r <- Ã^T((1 - c) * r) + (c . r) q until ||r' - r|| < epsilon.

    Starts from q unless a warm start ``r0`` is given.
    """
    cfg = cfg or IterationConfig()
    s = _check_seed(t, s)
    c = effective_restart(t, c)
    norm = _NORMS[cfg.norm]

    if r0 is None:
        r = np.zeros(t.n)
        r[s] = 1.0
    else:
        r = np.array(r0, dtype=np.float64)
        if r.shape != (t.n,):
            raise DimensionError("warm start has the wrong length")

    residuals = []
    delta = np.inf
    for it in range(1, cfg.max_iterations + 1):
        r_new = rwer_step(t, c, s, r)
        delta = norm(r_new - r)
        residuals.append(delta)
        r = r_new
        if delta < cfg.epsilon:
            return ScoreVector(_finish(r), s, delta, it, residuals)
    raise NonConvergence("RWER power iteration", cfg.max_iterations, delta)


def iteration_matrix(t: TransitionMatrix, c, s: int, dense_limit=DENSE_LIMIT) -> np.ndarray:
    """Dense B = Ã^T (I - diag(c)) + q (c - 1)^T."""
    if t.n > dense_limit:
        raise DenseLimitExceeded(f"{t.n} nodes exceeds dense limit {dense_limit}")
    s = _check_seed(t, s)
    c = effective_restart(t, c)
    B = t.normalized_t.toarray() * (1.0 - c)[None, :]
    B[s, :] += c - 1.0
    return B


def closed_form_matrix(t: TransitionMatrix, c, s: int, dense_limit=DENSE_LIMIT) -> np.ndarray:
    """Dense M = (I - B)^{-1}; column s is the score vector.  For tests and small graphs."""
    B = iteration_matrix(t, c, s, dense_limit)
    I_B = np.eye(t.n) - B
    try:
        lu = scipy.linalg.lu_factor(I_B, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularMatrix(str(exc)) from exc
    if np.any(np.abs(np.diag(lu[0])) < np.finfo(float).eps * t.n):
        raise SingularMatrix("I - B is numerically singular")
    return scipy.linalg.lu_solve(lu, np.eye(t.n))


def rwer_closed_form(t: TransitionMatrix, c, s: int, dense_limit=DENSE_LIMIT) -> ScoreVector:
    """Solve (I - B) r = q by LU with partial pivoting."""
    B = iteration_matrix(t, c, s, dense_limit)
    s = int(s)
    q = np.zeros(t.n)
    q[s] = 1.0
    I_B = np.eye(t.n) - B
    lu, piv = scipy.linalg.lu_factor(I_B)
    if np.any(np.abs(np.diag(lu)) < np.finfo(float).eps * t.n):
        raise SingularMatrix("I - B is numerically singular")
    r = scipy.linalg.lu_solve((lu, piv), q)
    if not np.all(np.isfinite(r)):
        raise SingularMatrix("closed-form solve produced non-finite scores")
    return ScoreVector(_finish(r), s)


def rwr_scores(
    t: TransitionMatrix,
    c_scalar: float,
    s: int,
    cfg: IterationConfig | None = None,
    c_min=C_MIN,
    c_max=C_MAX,
) -> ScoreVector:
    """Classic random walk with restart: RWER with every restart probability equal."""
    if not c_min <= c_scalar <= c_max:
        raise ValueError(f"restart probability {c_scalar} outside [{c_min}, {c_max}]")
    return rwer_power_iteration(t, np.full(t.n, float(c_scalar)), s, cfg)
