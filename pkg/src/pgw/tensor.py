"""The quartic GW objective and its tensor-matrix product.

``M[i, j, k, l] = L(CX[i, k], CY[j, l])`` and ``(M o g)[i, j] = sum_kl M[i, j, k, l] g[k, l]``.
The penalized tensor is ``M - 2 lam``, so ``Mt o g = M o g - 2 lam |g|`` where
``|g|`` is the entry sum.  Everything on the solver path uses the factored
product; :class:`DenseTensor` exists only to check it.
"""

from dataclasses import dataclass

import numpy as np

from .losses import get_loss
from .spaces import PgwProblem, PlanInfeasibleError, as_matrix, validate_plan

DENSE_CAP = 10_000


@dataclass(frozen=True)
class CostDecomposition:
    """``f1(CX), f2(CY), h1(CX), h2(CY)`` for a factorized loss."""

    f1_cx: np.ndarray
    f2_cy: np.ndarray
    h1_cx: np.ndarray
    h2_cy: np.ndarray

    @classmethod
    def from_costs(cls, cx, cy, loss="square"):
        loss = get_loss(loss)
        if not loss.factorized:
            raise ValueError(f"loss {loss.name!r} has no factorization")
        cx = np.asarray(cx, dtype=np.float64)
        cy = np.asarray(cy, dtype=np.float64)
        return cls(loss.f1(cx), loss.f2(cy), loss.h1(cx), loss.h2(cy))

    @classmethod
    def from_problem(cls, problem: PgwProblem):
        return cls.from_costs(
            problem.source.cost_matrix, problem.target.cost_matrix, problem.loss
        )

    @property
    def shape(self):
        return self.f1_cx.shape[0], self.f2_cy.shape[0]


@dataclass(frozen=True)
class DenseTensor:
    """Materialized ``n x m x n x m`` cost tensor (test oracle only)."""

    values: np.ndarray

    @classmethod
    def from_costs(cls, cx, cy, loss="square"):
        loss = get_loss(loss)
        cx = np.asarray(cx, dtype=np.float64)
        cy = np.asarray(cy, dtype=np.float64)
        n, m = cx.shape[0], cy.shape[0]
        if n * m > DENSE_CAP:
            raise ValueError(f"dense tensor refused: n*m = {n * m} > {DENSE_CAP}")
        values = loss.pointwise(cx[:, None, :, None], cy[None, :, None, :])
        return cls(np.ascontiguousarray(values, dtype=np.float64))

    @classmethod
    def from_problem(cls, problem: PgwProblem):
        return cls.from_costs(
            problem.source.cost_matrix, problem.target.cost_matrix, problem.loss
        )

    @property
    def shape(self):
        return self.values.shape[:2]


def _check(shape, g):
    if g.shape != tuple(shape):
        raise ValueError(f"plan shape {g.shape} does not match {tuple(shape)}")


def tensor_product_factored(decomp: CostDecomposition, plan) -> np.ndarray:
    """``M o plan`` in ``O(n^2 m + n m^2)`` without forming ``M``."""
    g = as_matrix(plan)
    _check(decomp.shape, g)
    u = (decomp.f1_cx @ g.sum(axis=1))[:, None] + (g.sum(axis=0) @ decomp.f2_cy.T)[None, :]
    return u - decomp.h1_cx @ g @ decomp.h2_cy.T


def tensor_product_naive(tensor: DenseTensor, plan) -> np.ndarray:
    """``M o plan`` by direct summation over the materialized tensor."""
    g = as_matrix(plan)
    n, m = tensor.shape
    if n * m > DENSE_CAP:
        raise ValueError(f"naive product refused: n*m = {n * m} > {DENSE_CAP}")
    _check((n, m), g)
    return np.tensordot(tensor.values, g, axes=([2, 3], [0, 1]))


def tilde_product(decomp, plan, lam):
    """Return ``(M o g, Mt o g)``; the first is reused by the line search."""
    g = as_matrix(plan)
    mg = tensor_product_factored(decomp, g)
    return mg, mg - 2.0 * lam * g.sum()


def grad_tilde(decomp, plan, lam) -> np.ndarray:
    """Gradient ``2 (M o g - 2 lam |g|)`` of the penalized objective."""
    return 2.0 * tilde_product(decomp, plan, lam)[1]


def objective_tilde(decomp, plan, lam) -> float:
    """Penalized quadratic ``<M o g, g> - 2 lam |g|^2``."""
    g = as_matrix(plan)
    return float(np.vdot(tensor_product_factored(decomp, g), g) - 2.0 * lam * g.sum() ** 2)


def objective_tilde_dense(tensor: DenseTensor, plan, lam) -> float:
    g = as_matrix(plan)
    return float(np.vdot(tensor_product_naive(tensor, g), g) - 2.0 * lam * g.sum() ** 2)


def pgw_value(problem: PgwProblem, plan, decomp=None) -> float:
    """Partial GW cost of a feasible plan, constant penalty included.

    Raises
    ------
    PlanInfeasibleError
        If the plan leaves the partial coupling set by more than
        ``problem.tol``.
    """
    g = as_matrix(plan)
    check = validate_plan(g, problem.p, problem.q, problem.tol)
    if not check.feasible:
        raise PlanInfeasibleError(
            f"plan violates the marginal bounds by {check.max_violation:.3e}",
            check.max_violation,
        )
    const = problem.lam * (problem.p.sum() ** 2 + problem.q.sum() ** 2)
    if problem.dense_only:
        return objective_tilde_dense(DenseTensor.from_problem(problem), g, problem.lam) + const
    if decomp is None:
        decomp = CostDecomposition.from_problem(problem)
    return objective_tilde(decomp, g, problem.lam) + const


def threshold_mass(problem: PgwProblem, plan) -> float:
    """Mass of ``g (x) g`` on index quadruples whose cost exceeds ``2 lam``.

    Often zero at optimal plans, though not always.
    Costs ``O(n^2 m^2)`` time, ``O(n m^2)`` memory.
    """
    g = as_matrix(plan)
    cx = problem.source.cost_matrix
    cy = problem.target.cost_matrix
    _check(problem.shape, g)
    thresh = 2.0 * problem.lam
    total = 0.0
    for i in range(g.shape[0]):
        if not g[i].any():
            continue
        # mask[k, j, l] for fixed i
        mask = problem.loss.pointwise(cx[i][:, None, None], cy[None, :, :]) > thresh
        total += float(np.einsum("j,kjl,kl->", g[i], mask, g))
    return total
