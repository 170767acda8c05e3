"""Supervised learning of the restart vector.

Cost:  F(c) = lam * ||c - o||^2 + sum_{x in P, y in N} h(r_y - r_x),
with h the logistic surrogate h(d) = 1 / (1 + exp(-d / b)).

Gradient:  2 lam (c - o) + ((-Ã + 1 e_s^T) x) * r,
where x solves (I - B^T) x = p and p aggregates the pair weights
h'(d_yx) onto P and N (+ on negatives, - on positives).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .engine import (
    C_MAX,
    C_MIN,
    DENSE_LIMIT,
    IterationConfig,
    ScoreVector,
    restart_vector,
    rwer_closed_form,
    rwer_power_iteration,
)
from .errors import DimensionError
from .graph import TransitionMatrix
from .solver import AdjointOperator, SolveConfig, solve_adjoint

log = logging.getLogger(__name__)

VARIANTS = {"sure": "gmres", "sure_fast": "richardson"}


@dataclass(frozen=True)
class SupervisionInstance:
    """Query node with preferred (positive) and disliked (negative) nodes.

    The seed may only appear in P or N when ``allow_seed`` is set; the math
    does not need the restriction but the ranking task does.
    """

    seed: int
    positives: tuple
    negatives: tuple
    allow_seed: bool = False

    def __post_init__(self):
        pos = tuple(int(v) for v in self.positives)
        neg = tuple(int(v) for v in self.negatives)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)
        if not pos or not neg:
            raise ValueError("positive and negative sets must be non-empty")
        if len(set(pos)) != len(pos) or len(set(neg)) != len(neg):
            raise ValueError("positive and negative sets must not contain duplicates")
        if set(pos) & set(neg):
            raise ValueError("positive and negative sets overlap")
        if not self.allow_seed and self.seed in set(pos) | set(neg):
            raise ValueError("the seed node may not be a positive or negative")

    def check(self, n: int) -> None:
        ids = (self.seed,) + self.positives + self.negatives
        if min(ids) < 0 or max(ids) >= n:
            raise DimensionError(f"supervision references a node outside [0, {n})")


@dataclass(frozen=True)
class LearnConfig:
    b: float = 1e-3
    lam: float = 1.0
    origin: object = 0.2  # scalar or length-n vector
    eta: float = 0.1
    max_epochs: int = 200
    grad_tol: float = 1e-6
    step_tol: float = 1e-9
    safeguard: bool = True
    max_halvings: int = 20
    variant: str = "sure"
    c_min: float = C_MIN
    c_max: float = C_MAX
    # loss changes near an optimum are far below 1e-9, so the forward solve
    # runs tighter than the scoring default or the safeguard chases noise
    iteration: IterationConfig = field(default_factory=lambda: IterationConfig(epsilon=1e-12))
    solve: SolveConfig = field(default_factory=SolveConfig)

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("b must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {sorted(VARIANTS)}")
        if not 0.0 < self.c_min < self.c_max < 1.0:
            raise ValueError("need 0 < c_min < c_max < 1")

    def origin_vector(self, t: TransitionMatrix) -> np.ndarray:
        return restart_vector(self.origin, t, self.c_min, self.c_max)

    def solve_config(self) -> SolveConfig:
        return replace(self.solve, backend=VARIANTS[self.variant])


@dataclass
class GradientReport:
    gradient: np.ndarray
    loss: float
    pair_losses: np.ndarray  # |P| x |N|, rows are positives
    r: ScoreVector
    r_tilde: np.ndarray


def sigmoid_loss(x, b):
    """h(x) = 1 / (1 + exp(-x/b)); stable for any x/b."""
    return expit(np.asarray(x, dtype=np.float64) / b)


def sigmoid_loss_derivative(x, b):
    h = sigmoid_loss(x, b)
    return h * (1.0 - h) / b


def _scores(t, c, s, cfg: LearnConfig, method="iterative", r0=None) -> ScoreVector:
    if method == "dense":
        return rwer_closed_form(t, c, s)
    if method != "iterative":
        raise ValueError(f"unknown scoring method {method!r}")
    return rwer_power_iteration(t, c, s, cfg.iteration, r0=r0)


def pair_deltas(r: np.ndarray, inst: SupervisionInstance) -> np.ndarray:
    """delta[i, j] = r[N[j]] - r[P[i]]."""
    return r[list(inst.negatives)][None, :] - r[list(inst.positives)][:, None]


def _regularizer(c, o, lam):
    d = c - o
    return lam * float(d @ d)


def loss_value(t: TransitionMatrix, c, inst: SupervisionInstance, cfg: LearnConfig,
               method="iterative") -> float:
    """F(c).  ``method='dense'`` scores with the closed form instead of iterating."""
    inst.check(t.n)
    c = restart_vector(c, t, cfg.c_min, cfg.c_max)
    r = _scores(t, c, inst.seed, cfg, method).r
    return _regularizer(c, cfg.origin_vector(t), cfg.lam) + float(
        sigmoid_loss(pair_deltas(r, inst), cfg.b).sum()
    )


def build_p_tilde(inst: SupervisionInstance, pair_weights, n: int) -> np.ndarray:
    """Aggregate pair weights w[x, y] into p = sum w (e_y - e_x) in O(|P||N|)."""
    w = np.asarray(pair_weights, dtype=np.float64)
    if w.shape != (len(inst.positives), len(inst.negatives)):
        raise DimensionError("pair weight matrix must be |P| x |N|")
    p = np.zeros(n)
    np.add.at(p, list(inst.negatives), w.sum(axis=0))
    np.add.at(p, list(inst.positives), -w.sum(axis=1))
    return p


@dataclass
class _Forward:
    c: np.ndarray
    o: np.ndarray
    sv: ScoreVector
    h: np.ndarray
    loss: float


def _forward(t, c, inst, cfg, r0=None) -> _Forward:
    c = restart_vector(c, t, cfg.c_min, cfg.c_max)
    o = cfg.origin_vector(t)
    sv = _scores(t, c, inst.seed, cfg, r0=r0)
    h = sigmoid_loss(pair_deltas(sv.r, inst), cfg.b)
    return _Forward(c, o, sv, h, _regularizer(c, o, cfg.lam) + float(h.sum()))


def _backward(t, fw: _Forward, inst, cfg, solve_cfg) -> GradientReport:
    s = inst.seed
    r = fw.sv.r
    weights = fw.h * (1.0 - fw.h) / cfg.b
    p = build_p_tilde(inst, weights, t.n)
    r_tilde = solve_adjoint(AdjointOperator(t, fw.c, s), p, solve_cfg)
    pair_term = (r_tilde[s] - t.normalized @ r_tilde) * r
    g = 2.0 * cfg.lam * (fw.c - fw.o) + pair_term
    g[t.dangling] = 0.0
    return GradientReport(g, fw.loss, fw.h, fw.sv, r_tilde)


def gradient(t: TransitionMatrix, c, inst: SupervisionInstance, cfg: LearnConfig,
             r0=None, solve_cfg: SolveConfig | None = None) -> GradientReport:
    """Analytic gradient of F at c (one forward solve, one adjoint solve)."""
    inst.check(t.n)
    fw = _forward(t, c, inst, cfg, r0)
    return _backward(t, fw, inst, cfg, solve_cfg or cfg.solve_config())


def finite_difference_gradient(t: TransitionMatrix, c, inst: SupervisionInstance,
                               cfg: LearnConfig, step: float = 1e-6,
                               method: str | None = None) -> np.ndarray:
    """Central differences of F, one coordinate at a time (dangling coordinates skipped).

    Scores come from the dense closed form when the graph is small enough,
    otherwise from power iteration at a much tighter tolerance.  Only
    coordinate i changes, so the regularizer difference is taken on that
    coordinate alone and pair losses are differenced pair by pair, which keeps
    cancellation error well below the step size.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    inst.check(t.n)
    c = restart_vector(c, t, cfg.c_min, cfg.c_max)
    o = cfg.origin_vector(t)
    live = ~t.dangling
    if np.any(c[live] - step < cfg.c_min) or np.any(c[live] + step > cfg.c_max):
        raise ValueError("c +/- step leaves [c_min, c_max]")
    if method is None:
        method = "dense" if t.n <= DENSE_LIMIT else "iterative"
    fd_cfg = replace(cfg, iteration=replace(cfg.iteration, epsilon=1e-14))

    def pair_loss(cc):
        r = _scores(t, cc, inst.seed, fd_cfg, method).r
        return sigmoid_loss(pair_deltas(r, inst), cfg.b)

    g = np.zeros(t.n)
    for i in np.flatnonzero(live):
        cp = c.copy()
        cm = c.copy()
        cp[i] += step
        cm[i] -= step
        d_pairs = float((pair_loss(cp) - pair_loss(cm)).sum())
        d_reg = cfg.lam * ((cp[i] - o[i]) ** 2 - (cm[i] - o[i]) ** 2)
        g[i] = (d_pairs + d_reg) / (2 * step)
    return g


def project(c, t: TransitionMatrix, cfg: LearnConfig) -> np.ndarray:
    """Clip into [c_min, c_max] and re-pin dangling nodes."""
    c = np.clip(c, cfg.c_min, cfg.c_max)
    c[t.dangling] = 1.0
    return c


@dataclass
class LearnResult:
    c: np.ndarray
    trace: list  # loss per accepted iterate, trace[0] = F(o)
    epochs: int
    stop_reason: str
    grad_norms: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)
    forward_iterations: list = field(default_factory=list)
    forward_residuals: list = field(default_factory=list)
    r: ScoreVector | None = None


def sure_learn(t: TransitionMatrix, inst: SupervisionInstance, cfg: LearnConfig | None = None) -> LearnResult:
    """Projected gradient descent on F starting from c = o.

    With ``cfg.safeguard`` a step that would increase F is retried with half
    the learning rate (up to ``max_halvings`` times); the rate is restored at
    the start of every epoch.
    """
    cfg = cfg or LearnConfig()
    inst.check(t.n)
    solve_cfg = cfg.solve_config()
    c = project(cfg.origin_vector(t), t, cfg)
    rep = gradient(t, c, inst, cfg, solve_cfg=solve_cfg)
    res = LearnResult(c, [rep.loss], 0, "max_epochs", r=rep.r)
    res.forward_iterations.append(rep.r.iterations)
    res.forward_residuals.append(rep.r.residual)

    for epoch in range(1, cfg.max_epochs + 1):
        g = rep.gradient
        # projected gradient: components pushing c out of the box do not count
        gnorm = float(np.abs(project(c - g, t, cfg) - c).max(initial=0.0))
        res.grad_norms.append(gnorm)
        if gnorm < cfg.grad_tol:
            res.stop_reason = "grad_tol"
            break

        eta = cfg.eta
        for _ in range(cfg.max_halvings + 1):
            trial = _forward(t, project(c - eta * g, t, cfg), inst, cfg, r0=rep.r.r)
            if not cfg.safeguard or trial.loss <= rep.loss:
                break
            eta *= 0.5
        else:
            # close to an optimum the decrease drowns in solver noise; only warn when far from it
            level = logging.WARNING if gnorm > 100 * cfg.grad_tol else logging.INFO
            log.log(level, "loss did not decrease after %d step halvings; stopping at epoch %d "
                    "(projected gradient %.3g)", cfg.max_halvings, epoch, gnorm)
            res.stop_reason = "safeguard_exhausted"
            break

        c_new = trial.c
        new = _backward(t, trial, inst, cfg, solve_cfg)
        step = float(np.abs(c_new - c).sum())
        c, rep = c_new, new
        res.epochs = epoch
        res.trace.append(rep.loss)
        res.step_sizes.append(eta)
        res.forward_iterations.append(rep.r.iterations)
        res.forward_residuals.append(rep.r.residual)
        if step < cfg.step_tol:
            res.stop_reason = "step_tol"
            break

    res.c = c
    res.r = rep.r
    return res


# flat keys for config files and manifests; nested configs are flattened
_ITER_KEYS = {"epsilon": "epsilon", "forward_max_iterations": "max_iterations", "norm": "norm"}
_SOLVE_KEYS = {"solve_tolerance": "tolerance", "solve_max_iterations": "max_iterations",
               "gmres_restart": "gmres_restart"}


def learn_config_from_dict(d: dict | None, base: LearnConfig | None = None) -> LearnConfig:
    """Override ``base`` (default LearnConfig()) with the flat keys in ``d``; unknown keys raise."""
    base = base or LearnConfig()
    d = dict(d or {})
    if "variant" in d:
        d["variant"] = str(d["variant"]).replace("-", "_")
    it = {_ITER_KEYS[k]: d.pop(k) for k in list(d) if k in _ITER_KEYS}
    sv = {_SOLVE_KEYS[k]: d.pop(k) for k in list(d) if k in _SOLVE_KEYS}
    known = {f for f in LearnConfig.__dataclass_fields__ if f not in ("iteration", "solve")}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown learning options: {sorted(unknown)}")
    if isinstance(d.get("origin"), list):
        d["origin"] = tuple(float(v) for v in d["origin"])
    return replace(base, iteration=replace(base.iteration, **it), solve=replace(base.solve, **sv), **d)


def learn_config_to_dict(cfg: LearnConfig) -> dict:
    d = {f: getattr(cfg, f) for f in LearnConfig.__dataclass_fields__ if f not in ("iteration", "solve")}
    if not np.isscalar(d["origin"]):
        d["origin"] = [float(v) for v in np.asarray(d["origin"])]
    for k, attr in _ITER_KEYS.items():
        d[k] = getattr(cfg.iteration, attr)
    for k, attr in _SOLVE_KEYS.items():
        d[k] = getattr(cfg.solve, attr)
    return d
