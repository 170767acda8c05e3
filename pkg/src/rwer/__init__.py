"""Random walk with extended restart: per-node restart probabilities and a learner for them."""

from .engine import (
    C_MAX,
    C_MIN,
    IterationConfig,
    ScoreVector,
    closed_form_matrix,
    restart_vector,
    rwer_closed_form,
    rwer_power_iteration,
    rwr_scores,
)
from .errors import (
    DenseLimitExceeded,
    DimensionError,
    GraphFormatError,
    NonConvergence,
    NumericalError,
    RwerError,
    SingularMatrix,
)
from .graph import SparseGraph, TransitionMatrix, from_edges, load_edge_list, row_normalize
from .learn import LearnConfig, LearnResult, SupervisionInstance, gradient, loss_value, sure_learn
from .solver import AdjointOperator, SolveConfig, solve_adjoint

__version__ = "0.1.0"

__all__ = [
    "C_MAX", "C_MIN", "IterationConfig", "ScoreVector", "closed_form_matrix", "restart_vector",
    "rwer_closed_form", "rwer_power_iteration", "rwr_scores",
    "DenseLimitExceeded", "DimensionError", "GraphFormatError", "NonConvergence", "NumericalError",
    "RwerError", "SingularMatrix",
    "SparseGraph", "TransitionMatrix", "from_edges", "load_edge_list", "row_normalize",
    "LearnConfig", "LearnResult", "SupervisionInstance", "gradient", "loss_value", "sure_learn",
    "AdjointOperator", "SolveConfig", "solve_adjoint",
    "__version__",
]
