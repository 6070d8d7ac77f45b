"""Exact transportation LP and the partial-to-balanced reduction.

``solve_pot_linear`` minimizes ``<G, g>`` over partial couplings
``{g >= 0, g 1 <= p, g^T 1 <= q}`` by appending one dummy row and column
with zero cost.  The dummy row supplies ``|q|`` and the dummy column demands
``|p|``, so the padded problem is balanced and its upper-left block is the
partial plan.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._simplex import PRICE_BLOCK, PRICE_FIRST, STATUS_OPTIMAL, network_simplex
from .spaces import TransportPlan

PRICING = {"block": PRICE_BLOCK, "first": PRICE_FIRST}
EPS_SCALE = 4e-15


@dataclass(frozen=True)
class LpInstance:
    """Balanced transportation problem ``min <cost, x>``, ``x 1 = supply``, ``x^T 1 = demand``."""

    cost: np.ndarray
    row_supply: np.ndarray
    col_demand: np.ndarray

    def __post_init__(self):
        cost = np.ascontiguousarray(self.cost, dtype=np.float64)
        a = np.ascontiguousarray(self.row_supply, dtype=np.float64).reshape(-1)
        b = np.ascontiguousarray(self.col_demand, dtype=np.float64).reshape(-1)
        if cost.shape != (a.size, b.size):
            raise ValueError(f"cost shape {cost.shape} does not match ({a.size}, {b.size})")
        if not np.all(np.isfinite(cost)):
            raise ValueError("costs must be finite")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("supplies and demands must be nonnegative")
        sa, sb = a.sum(), b.sum()
        if abs(sa - sb) > 1e-9 * max(sa, sb, 1e-300):
            raise ValueError(f"unbalanced instance: supply {sa!r} != demand {sb!r}")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "row_supply", a)
        object.__setattr__(self, "col_demand", b)

    @property
    def shape(self):
        return self.cost.shape


@dataclass(frozen=True)
class LpSolution:
    plan: TransportPlan
    objective: float
    iterations: int
    status: str
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def default_iter_cap(n, m) -> int:
    return 300 * max(n, m)


def solve_ot(instance: LpInstance, max_iters=None, pricing="block", perturb=0.0) -> LpSolution:
    """Exact optimal vertex of a balanced transportation problem.

    Parameters
    ----------
    instance : LpInstance
    max_iters : int, optional
        Pivot cap; defaults to ``300 * max(n, m)``.
    pricing : {"block", "first"}
        Entering-arc rule.  ``"first"`` takes the lowest-index arc with a
        negative reduced cost; ``"block"`` scans cyclically in blocks of
        ``sqrt(n m)`` arcs and takes the most negative arc in the first
        block holding one.  Both are deterministic.
    perturb : float
        If positive, supplies are lifted by ``perturb * (i + 1) / n`` (the
        excess is added to the last demand) before solving.  Off by default.
    """
    n, m = instance.shape
    if max_iters is None:
        max_iters = default_iter_cap(n, m)
    a = instance.row_supply
    b = instance.col_demand
    if perturb > 0:
        bump = perturb * np.arange(1, n + 1) / n
        a = a + bump
        b = b.copy()
        b[-1] += bump.sum()
    b = b * (a.sum() / b.sum()) if b.sum() > 0 else b
    flow, alpha, beta, iters, status, art_flow = network_simplex(
        instance.cost, a, b, int(max_iters), PRICING[pricing], EPS_SCALE
    )
    label = "optimal" if status == STATUS_OPTIMAL else "iteration-limit"
    if label == "optimal" and art_flow > 1e-9 * max(a.sum(), 1.0):
        label = "infeasible"
    if label != "optimal":
        warnings.warn(f"transportation LP stopped: {label} after {iters} pivots", RuntimeWarning)
    plan = TransportPlan(np.maximum(flow, 0.0))
    return LpSolution(
        plan=plan,
        objective=float(np.vdot(instance.cost, plan.matrix)),
        iterations=int(iters),
        status=label,
        alpha=alpha,
        beta=beta,
    )


def pad_for_pot(gradient, p, q) -> LpInstance:
    """Balanced instance with one zero-cost dummy row and column."""
    g = np.asarray(gradient, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n, m = g.shape
    cost = np.zeros((n + 1, m + 1))
    cost[:n, :m] = g
    return LpInstance(cost, np.append(p, q.sum()), np.append(q, p.sum()))


def reduction_masks(gradient):
    """Rows and columns of ``gradient`` holding at least one negative entry."""
    neg = np.asarray(gradient) < 0
    return neg.any(axis=1), neg.any(axis=0)


def solve_pot_linear(gradient, p, q, reduction=True, max_iters=None, pricing="block"):
    """Minimize ``<gradient, g>`` over partial couplings of ``(p, q)``.

    With ``reduction`` on, rows and columns of ``gradient`` that hold no
    negative entry are dropped before the LP (an optimal plan leaves them
    empty) and re-inserted as zeros.

    Returns
    -------
    plan : ndarray, shape (n, m)
    info : LpSolution or None
        None when the reduction removed every row or column.
    """
    g = np.asarray(gradient, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n, m = g.shape
    if not reduction:
        sol = solve_ot(pad_for_pot(g, p, q), max_iters, pricing)
        return np.array(sol.plan.matrix[:n, :m]), sol
    rows, cols = reduction_masks(g)
    out = np.zeros((n, m))
    if not rows.any() or not cols.any():
        return out, None
    ri = np.flatnonzero(rows)
    ci = np.flatnonzero(cols)
    sub = g[np.ix_(ri, ci)]
    if max_iters is None:
        max_iters = default_iter_cap(ri.size + 1, ci.size + 1)
    sol = solve_ot(pad_for_pot(sub, p[ri], q[ci]), max_iters, pricing)
    out[np.ix_(ri, ci)] = sol.plan.matrix[: ri.size, : ci.size]
    return out, sol
