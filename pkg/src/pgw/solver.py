"""Frank-Wolfe solvers for partial Gromov-Wasserstein.

Both variants minimize ``<Mt o g, g>`` over partial couplings.  ``v1`` works
on the ``n x m`` plan and finds directions with the padded partial LP;
``v2`` carries the ``(n+1) x (m+1)`` balanced plan with one dummy point per
side and calls the balanced LP directly.  Tensor products in ``v2`` only
touch the upper-left block, because the padded tensor vanishes elsewhere.
Given the same start and LP pivot rule the two produce the same iterates.
"""

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lp import LpInstance, default_iter_cap, reduction_masks, solve_ot, solve_pot_linear
from .spaces import PgwProblem, TransportPlan, as_matrix, validate_plan
from .tensor import CostDecomposition, pgw_value, tensor_product_factored, tilde_product

_TINY = 1e-300


@dataclass(frozen=True)
class FwConfig:
    """Solver settings.

    ``tol`` bounds both the relative objective change and the Frank-Wolfe
    gap; whichever drops below it first stops the run.  ``line_search`` is
    ``"exact"`` (closed-form step) or ``"unit"`` (always step to the LP
    vertex).  ``lp_iter_cap`` defaults to ``300 * max`` of the padded LP
    dimensions.
    """

    solver_variant: str = "v1"
    max_iters: int = 1000
    tol: float = 1e-5
    line_search: str = "exact"
    reduction: bool = True
    lp_iter_cap: Optional[int] = None
    pricing: str = "block"
    n_starts: int = 1
    seed: int = 0
    keep_iterates: bool = False

    def __post_init__(self):
        if self.solver_variant not in ("v1", "v2"):
            raise ValueError("solver_variant must be 'v1' or 'v2'")
        if self.line_search not in ("exact", "unit"):
            raise ValueError("line_search must be 'exact' or 'unit'")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1 or self.n_starts < 1:
            raise ValueError("max_iters and n_starts must be >= 1")


@dataclass
class SolveReport:
    plan: TransportPlan
    pgw_value: float
    objective_trace: np.ndarray
    gap_trace: np.ndarray
    alpha_trace: np.ndarray
    transported_mass: float
    termination: str
    stop_reason: Optional[str]
    iterations: int
    wall_time: float
    variant: str
    lp_iterations: list = field(default_factory=list)
    augmented_plan: Optional[np.ndarray] = None
    iterates: Optional[list] = None
    starts: int = 1

    @property
    def converged(self) -> bool:
        return self.termination == "converged"


def init_plan(p, q) -> TransportPlan:
    """Product start ``p q^T / max(|p|, |q|)``, feasible for the partial bounds."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    scale = max(p.sum(), q.sum())
    if scale <= 0:
        warnings.warn("both masses are zero; returning the zero plan", RuntimeWarning)
        return TransportPlan(np.zeros((p.size, q.size)))
    return TransportPlan(np.outer(p, q) / scale)


def random_plan(p, q, rng) -> TransportPlan:
    """Random feasible plan: the product start with uniform entrywise damping."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    scale = max(p.sum(), q.sum(), _TINY)
    return TransportPlan(np.outer(p, q) * rng.random((p.size, q.size)) / scale)


def line_search_coeffs_v1(decomp, gamma, gamma_new, lam, m_gamma=None):
    """Coefficients ``(a, b)`` of ``L(g + t dg) = a t^2 + b t + L(g)``.

    ``m_gamma`` is ``M o gamma`` when already known from the gradient step.
    Sums of ``dg`` are signed entry sums.
    """
    g = as_matrix(gamma)
    dg = as_matrix(gamma_new) - g
    if m_gamma is None:
        m_gamma = tensor_product_factored(decomp, g)
    s_dg = dg.sum()
    a = np.vdot(tensor_product_factored(decomp, dg), dg) - 2.0 * lam * s_dg**2
    b = 2.0 * (np.vdot(m_gamma, dg) - 2.0 * lam * s_dg * g.sum())
    return float(a), float(b)


def optimal_alpha(a: float, b: float) -> float:
    """Minimizer of ``a t^2 + b t`` on ``[0, 1]``; ``a == 0`` counts as concave."""
    if a <= 0:
        return 0.0 if a + b > 0 else 1.0
    return min(max(-b / (2.0 * a), 0.0), 1.0)


def fw_gap(decomp, gamma, gamma_direction, lam) -> float:
    """Frank-Wolfe gap ``<grad L(g), g - g'>`` for the LP minimizer ``g'``."""
    g = as_matrix(gamma)
    grad = 2.0 * tilde_product(decomp, g, lam)[1]
    return float(np.vdot(grad, g - as_matrix(gamma_direction)))


def augment_plan(gamma, p, q) -> np.ndarray:
    """Balanced ``(n+1) x (m+1)`` plan for a partial plan (dummy bookkeeping)."""
    g = as_matrix(gamma)
    n, m = g.shape
    out = np.empty((n + 1, m + 1))
    out[:n, :m] = g
    out[:n, m] = p - g.sum(axis=1)
    out[n, :m] = q - g.sum(axis=0)
    out[n, m] = g.sum()
    return out


def gap_rate_bound(problem: PgwProblem, init_objective: float, min_objective=None):
    """Constant ``C`` with ``min_{k<=K} g_k <= C / sqrt(K)``.

    ``C = max(2 L1, D)`` where ``L1`` is the initial suboptimality and ``D``
    is a Lipschitz-times-squared-diameter term built from
    ``Lip <= sqrt(n m) |max M - 2 lam|`` and ``diam <= 2 min(|p|, |q|)``.
    Without a known minimum, ``L1`` uses the lower bound
    ``L >= -2 lam min(|p|, |q|)^2``.

    Returns ``(C, L1, D)``.
    """
    n, m = problem.shape
    s = min(problem.p.sum(), problem.q.sum()) ** 2
    lam = problem.lam
    if min_objective is None:
        min_objective = -2.0 * lam * s
    l1 = max(init_objective - min_objective, 0.0)
    cx = problem.source.cost_matrix
    cy = problem.target.cost_matrix
    lo_x, hi_x = cx.min(), cx.max()
    lo_y, hi_y = cy.min(), cy.max()
    corners = problem.loss.pointwise(
        np.array([lo_x, lo_x, hi_x, hi_x]), np.array([lo_y, hi_y, lo_y, hi_y])
    )
    max_m = float(np.max(corners))
    lip = np.sqrt(n * m) * abs(max_m - 2.0 * lam)
    d_l = lip * 4.0 * s
    return max(2.0 * l1, d_l), l1, d_l


def _direction_v2(grad, p_hat, q_hat, config, lp_cap):
    """Balanced LP on the padded gradient; returns the full padded plan."""
    n, m = grad.shape
    if not config.reduction:
        cost = np.zeros((n + 1, m + 1))
        cost[:n, :m] = grad
        sol = solve_ot(LpInstance(cost, p_hat, q_hat), lp_cap, config.pricing)
        return sol.plan.matrix, sol.iterations
    rows, cols = reduction_masks(grad)
    p, q = p_hat[:n], q_hat[:m]
    block = np.zeros((n, m))
    iters = 0
    if rows.any() and cols.any():
        ri = np.flatnonzero(rows)
        ci = np.flatnonzero(cols)
        cost = np.zeros((ri.size + 1, ci.size + 1))
        cost[:-1, :-1] = grad[np.ix_(ri, ci)]
        sub_p = np.append(p[ri], q[ci].sum())
        sub_q = np.append(q[ci], p[ri].sum())
        cap = lp_cap if lp_cap is not None else default_iter_cap(ri.size + 1, ci.size + 1)
        sol = solve_ot(LpInstance(cost, sub_p, sub_q), cap, config.pricing)
        block[np.ix_(ri, ci)] = sol.plan.matrix[:-1, :-1]
        iters = sol.iterations
    return augment_plan(block, p, q), iters


def _fw_run(problem, config, decomp, start, variant):
    p, q, lam = problem.p, problem.q, problem.lam
    n, m = problem.shape
    exact = config.line_search == "exact"
    t0 = time.perf_counter()

    g = np.array(as_matrix(start), dtype=np.float64)
    check = validate_plan(g, p, q, problem.tol)
    if not check.feasible:
        raise ValueError(f"initial plan is infeasible (violation {check.max_violation:.3e})")
    g = np.maximum(g, 0.0)
    if variant == "v2":
        p_hat = np.append(p, q.sum())
        q_hat = np.append(q, p.sum())
        g_hat = augment_plan(g, p, q)

    mg, tmg = tilde_product(decomp, g, lam)
    obj = float(np.vdot(tmg, g))
    objs, gaps, alphas, lp_iters = [obj], [], [], []
    iterates = [g.copy()] if config.keep_iterates else None
    termination, reason = "iteration-limit", None

    for _ in range(config.max_iters):
        grad = 2.0 * tmg
        if variant == "v1":
            g_dir, sol = solve_pot_linear(grad, p, q, config.reduction, config.lp_iter_cap, config.pricing)
            lp_iters.append(sol.iterations if sol is not None else 0)
        else:
            g_hat_dir, its = _direction_v2(grad, p_hat, q_hat, config, config.lp_iter_cap)
            lp_iters.append(its)
            g_dir = np.ascontiguousarray(g_hat_dir[:n, :m])
        dg = g_dir - g
        gap = float(np.vdot(grad, -dg))
        gaps.append(gap)
        small_gap = gap <= config.tol
        if small_gap or exact:
            s_dg = dg.sum()
            a = float(np.vdot(tensor_product_factored(decomp, dg), dg) - 2.0 * lam * s_dg**2)
            b = float(2.0 * (np.vdot(mg, dg) - 2.0 * lam * s_dg * g.sum()))
        alpha = optimal_alpha(a, b) if exact else 1.0
        if small_gap:
            # first-order stationary; only a negative-curvature step along the
            # LP direction can still make progress
            drop = -(a * alpha * alpha + b * alpha)
            if not drop > config.tol * max(abs(obj), _TINY):
                termination, reason = "converged", "gap"
                break
        alphas.append(alpha)
        if alpha == 0.0:
            termination, reason = "converged", "stationary"
            break
        if variant == "v1":
            g = g + alpha * dg
        else:
            g_hat = g_hat + alpha * (g_hat_dir - g_hat)
            g = np.ascontiguousarray(g_hat[:n, :m])
        if iterates is not None:
            iterates.append(g.copy())
        mg, tmg = tilde_product(decomp, g, lam)
        new_obj = float(np.vdot(tmg, g))
        objs.append(new_obj)
        rel = abs(obj - new_obj) / max(abs(new_obj), _TINY)
        obj = new_obj
        if rel <= config.tol:
            termination, reason = "converged", "objective"
            break

    plan = TransportPlan(np.maximum(g, 0.0))
    return SolveReport(
        plan=plan,
        pgw_value=pgw_value(problem, plan, decomp),
        objective_trace=np.array(objs),
        gap_trace=np.array(gaps),
        alpha_trace=np.array(alphas),
        transported_mass=plan.total_mass,
        termination=termination,
        stop_reason=reason,
        iterations=len(gaps),
        wall_time=time.perf_counter() - t0,
        variant=variant,
        lp_iterations=lp_iters,
        augmented_plan=g_hat if variant == "v2" else None,
        iterates=iterates,
    )


def _solve(problem, config, init, variant):
    if problem.dense_only:
        raise ValueError(f"loss {problem.loss.name!r} has no factorization; solvers need one")
    config = config or FwConfig(solver_variant=variant)
    decomp = CostDecomposition.from_problem(problem)
    first = init if init is not None else init_plan(problem.p, problem.q)
    best = _fw_run(problem, config, decomp, first, variant)
    if config.n_starts > 1:
        rng = np.random.default_rng(config.seed)
        for _ in range(config.n_starts - 1):
            rep = _fw_run(problem, config, decomp, random_plan(problem.p, problem.q, rng), variant)
            if rep.pgw_value < best.pgw_value:
                best = rep
        best.starts = config.n_starts
    return best


def solve_v1(problem: PgwProblem, config: Optional[FwConfig] = None, init=None) -> SolveReport:
    """Frank-Wolfe on the partial plan, directions from the padded partial LP."""
    return _solve(problem, config, init, "v1")


def solve_v2(problem: PgwProblem, config: Optional[FwConfig] = None, init=None) -> SolveReport:
    """Frank-Wolfe on the dummy-augmented balanced plan; returns its truncation."""
    return _solve(problem, config, init, "v2")


def solve(problem: PgwProblem, config: Optional[FwConfig] = None, init=None) -> SolveReport:
    config = config or FwConfig()
    return _solve(problem, config, init, config.solver_variant)
