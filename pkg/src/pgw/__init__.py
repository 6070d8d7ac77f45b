"""Partial Gromov-Wasserstein between discrete metric-measure spaces.

Set ``PGW_DISABLE_NUMBA=1`` to run every kernel as plain numpy/Python.
"""

from ._accel import BACKEND
from .losses import Loss, get_loss, square_loss
from .lp import LpInstance, LpSolution, pad_for_pot, solve_ot, solve_pot_linear
from .solver import (
    FwConfig,
    SolveReport,
    augment_plan,
    fw_gap,
    gap_rate_bound,
    init_plan,
    line_search_coeffs_v1,
    optimal_alpha,
    solve,
    solve_v1,
    solve_v2,
)
from .spaces import (
    InputError,
    MmSpace,
    PgwProblem,
    PlanInfeasibleError,
    TransportPlan,
    build_mm_space,
    load_mm_space,
    validate_plan,
)
from .tensor import (
    CostDecomposition,
    DenseTensor,
    grad_tilde,
    objective_tilde,
    pgw_value,
    tensor_product_factored,
    tensor_product_naive,
    threshold_mass,
)

__all__ = [
    "BACKEND",
    "CostDecomposition",
    "DenseTensor",
    "FwConfig",
    "InputError",
    "Loss",
    "LpInstance",
    "LpSolution",
    "MmSpace",
    "PgwProblem",
    "PlanInfeasibleError",
    "SolveReport",
    "TransportPlan",
    "augment_plan",
    "build_mm_space",
    "fw_gap",
    "gap_rate_bound",
    "get_loss",
    "grad_tilde",
    "init_plan",
    "line_search_coeffs_v1",
    "load_mm_space",
    "objective_tilde",
    "optimal_alpha",
    "pad_for_pot",
    "pgw_value",
    "solve",
    "solve_ot",
    "solve_pot_linear",
    "solve_v1",
    "solve_v2",
    "square_loss",
    "tensor_product_factored",
    "tensor_product_naive",
    "threshold_mass",
    "validate_plan",
]
