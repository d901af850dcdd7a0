"""Bilevel optimization with a discretized value-function penalty (DIVIDE-BLO)."""

from .covering import Covering, covering_size_bound, grid_covering, random_covering
from .geometry import project_product, project_simplex, simplex_oracle_qp
from .problem import (
    BoxSet,
    ProblemSpec,
    SmoothFunction,
    SmoothnessConstants,
    derive_constants_numerically,
    get_problem,
    make_synthetic_1d,
    project_box,
)
from .solver import (
    IterationTrace,
    SolverConfig,
    SolverState,
    kkt_feasibility_check,
    lipschitz_constant,
    penalty_gradient,
    rate_certificate,
    solve,
)
from .value_function import (
    ValueFunctionEval,
    approximation_error_bound,
    eval_value_function,
    oracle_true_value,
)

__version__ = "0.1.0"
