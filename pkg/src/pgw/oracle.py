"""Brute-force references for tests.  Never used on the solver path.

* Vertices of transportation polytopes by spanning-tree enumeration.
* Vertices of the partial coupling set, written as a flow polytope with one
  slack node (rows route unused supply to it, columns draw unmet demand
  from it), by the same enumeration.
* Global minima of the partial GW quadratic on tiny instances by visiting
  every face of the feasible polytope and solving the stationarity system of
  the objective restricted to that face.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .lp import LpInstance, solve_pot_linear
from .solver import FwConfig, _fw_run
from .spaces import PgwProblem, TransportPlan
from .tensor import CostDecomposition, DenseTensor

VERTEX_CAP = 8
PGW_CAP = 9


@njit
def _tree_flows(n_nodes, eu, ev, balance, chosen, out):
    """Flows on a spanning tree by leaf peeling; False if any is negative."""
    k = chosen.shape[0]
    deg = np.zeros(n_nodes, dtype=np.int64)
    for t in range(k):
        deg[eu[chosen[t]]] += 1
        deg[ev[chosen[t]]] += 1
    used = np.zeros(k, dtype=np.bool_)
    res = balance.copy()
    scale = 0.0
    for v in range(n_nodes):
        scale = max(scale, abs(balance[v]))
    tol = 1e-12 * max(scale, 1.0)
    for _ in range(k):
        leaf = -1
        slot = -1
        for t in range(k):
            if used[t]:
                continue
            e = chosen[t]
            if deg[eu[e]] == 1:
                leaf = eu[e]
                slot = t
                break
            if deg[ev[e]] == 1:
                leaf = ev[e]
                slot = t
                break
        e = chosen[slot]
        if leaf == eu[e]:
            f = res[leaf]
            other = ev[e]
            res[other] += f
        else:
            f = -res[leaf]
            other = eu[e]
            res[other] -= f
        res[leaf] = 0.0
        if f < -tol:
            return False
        out[e] = max(f, 0.0)
        used[slot] = True
        deg[eu[e]] -= 1
        deg[ev[e]] -= 1
    return True


@njit
def _enumerate_trees(n_nodes, eu, ev, balance, capacity):
    """All spanning trees (edges taken in index order) with nonnegative flows."""
    n_edges = eu.shape[0]
    need = n_nodes - 1
    out = np.zeros((capacity, n_edges))
    count = 0
    labels = np.empty((need + 1, n_nodes), dtype=np.int64)
    for v in range(n_nodes):
        labels[0, v] = v
    chosen = np.empty(need, dtype=np.int64)
    nxt = np.zeros(need + 1, dtype=np.int64)
    depth = 0
    nxt[0] = 0
    while depth >= 0:
        if depth == need:
            row = np.zeros(n_edges)
            if _tree_flows(n_nodes, eu, ev, balance, chosen, row):
                if count < capacity:
                    out[count] = row
                count += 1
            depth -= 1
            continue
        e = nxt[depth]
        placed = False
        while e <= n_edges - (need - depth):
            a = labels[depth, eu[e]]
            b = labels[depth, ev[e]]
            if a != b:
                chosen[depth] = e
                nxt[depth] = e + 1
                for v in range(n_nodes):
                    lv = labels[depth, v]
                    labels[depth + 1, v] = a if lv == b else lv
                nxt[depth + 1] = e + 1
                depth += 1
                placed = True
                break
            e += 1
        if not placed:
            depth -= 1
    return out[: min(count, capacity)], count


def _spanning_tree_count(n_nodes, eu, ev):
    lap = np.zeros((n_nodes, n_nodes))
    for a, b in zip(eu, ev):
        lap[a, a] += 1
        lap[b, b] += 1
        lap[a, b] -= 1
        lap[b, a] -= 1
    return int(round(np.linalg.det(lap[1:, 1:])))


def _unique_plans(flows, n, m):
    plans = flows[:, : n * m].reshape(-1, n, m)
    if plans.shape[0] == 0:
        return plans
    keys = np.round(plans.reshape(plans.shape[0], -1), 12)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return plans[np.sort(idx)]


def enumerate_transport_vertices(instance: LpInstance) -> np.ndarray:
    """Distinct basic feasible plans of a balanced transportation polytope.

    Returns an array of shape ``(k, n, m)``.
    """
    n, m = instance.shape
    if n + m > VERTEX_CAP:
        raise ValueError(f"vertex enumeration refused: n + m = {n + m} > {VERTEX_CAP}")
    eu = np.repeat(np.arange(n), m).astype(np.int64)
    ev = (n + np.tile(np.arange(m), n)).astype(np.int64)
    balance = np.concatenate([instance.row_supply, -instance.col_demand])
    cap = _spanning_tree_count(n + m, eu, ev)
    flows, _ = _enumerate_trees(n + m, eu, ev, balance, max(cap, 1))
    return _unique_plans(flows, n, m)


def enumerate_partial_vertices(p, q) -> np.ndarray:
    """Distinct vertices of ``{g >= 0, g 1 <= p, g^T 1 <= q}``, shape ``(k, n, m)``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n, m = p.size, q.size
    if n + m > VERTEX_CAP:
        raise ValueError(f"vertex enumeration refused: n + m = {n + m} > {VERTEX_CAP}")
    z = n + m
    eu = np.concatenate([np.repeat(np.arange(n), m), np.arange(n), np.full(m, z)])
    ev = np.concatenate([n + np.tile(np.arange(m), n), np.full(n, z), n + np.arange(m)])
    eu = eu.astype(np.int64)
    ev = ev.astype(np.int64)
    balance = np.concatenate([p, -q, [q.sum() - p.sum()]])
    cap = _spanning_tree_count(z + 1, eu, ev)
    flows, _ = _enumerate_trees(z + 1, eu, ev, balance, max(cap, 1))
    return _unique_plans(flows, n, m)


def min_partial_linear(cost, p, q):
    """``min <cost, g>`` over the partial coupling set by vertex enumeration."""
    verts = enumerate_partial_vertices(p, q)
    vals = np.einsum("kij,ij->k", verts, np.asarray(cost, dtype=np.float64))
    best = int(np.argmin(vals))
    return float(vals[best]), verts[best]


# -- global optimum of the quadratic -----------------------------------------


@dataclass(frozen=True)
class OracleResult:
    best_plan: TransportPlan
    best_value: float
    starts_used: int
    certificate: float
    faces_checked: int


def _face_minima(quad, p, q, free):
    """Best stationary point of ``x^T quad x`` over every face of the partial set."""
    n, m = p.size, q.size
    best_val = 0.0
    best_x = np.zeros(n * m)
    checked = 1
    scale = max(np.abs(quad).max(), 1.0)
    free = list(free)
    for size in range(1, len(free) + 1):
        for support in itertools.combinations(free, size):
            s = np.array(support)
            rows = sorted({k // m for k in support})
            cols = sorted({k % m for k in support})
            qs = quad[np.ix_(s, s)]
            for n_r in range(len(rows) + 1):
                for tr in itertools.combinations(rows, n_r):
                    for n_c in range(len(cols) + 1):
                        for tc in itertools.combinations(cols, n_c):
                            checked += 1
                            x = _stationary_on_face(qs, s, m, tr, tc, p, q, scale)
                            if x is None:
                                continue
                            full = np.zeros(n * m)
                            full[s] = x
                            g = full.reshape(n, m)
                            if (
                                np.any(g.sum(axis=1) > p + 1e-12)
                                or np.any(g.sum(axis=0) > q + 1e-12)
                            ):
                                continue
                            val = float(full @ quad @ full)
                            if val < best_val:
                                best_val, best_x = val, full
    return best_val, best_x, checked


def _stationary_on_face(qs, s, m, tight_rows, tight_cols, p, q, scale):
    k = s.size
    a = np.zeros((len(tight_rows) + len(tight_cols), k))
    b = np.zeros(a.shape[0])
    for r, i in enumerate(tight_rows):
        a[r] = (s // m) == i
        b[r] = p[i]
    off = len(tight_rows)
    for r, j in enumerate(tight_cols):
        a[off + r] = (s % m) == j
        b[off + r] = q[j]
    if a.shape[0]:
        x0, *_ = np.linalg.lstsq(a, b, rcond=None)
        if np.abs(a @ x0 - b).max() > 1e-12 * max(1.0, np.abs(b).max()):
            return None
        _, sv, vt = np.linalg.svd(a)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        null = vt[rank:].T
    else:
        x0 = np.zeros(k)
        null = np.eye(k)
    if null.shape[1]:
        h = null.T @ qs @ null
        h = 0.5 * (h + h.T)
        if np.linalg.eigvalsh(h)[0] <= 1e-10 * scale:
            return None
        z = np.linalg.solve(h, -(null.T @ qs @ x0))
        x = x0 + null @ z
    else:
        x = x0
    if x.min() < -1e-12:
        return None
    return np.maximum(x, 0.0)


def _grid_starts(p, q, step, max_starts):
    n, m = p.size, q.size
    axes = [np.arange(0.0, min(p[k // m], q[k % m]) + 1e-15, step) for k in range(n * m)]
    total = int(np.prod([len(a) for a in axes]))
    starts = []
    for idx, combo in enumerate(itertools.product(*axes)):
        g = np.array(combo).reshape(n, m)
        if np.all(g.sum(axis=1) <= p + 1e-12) and np.all(g.sum(axis=0) <= q + 1e-12):
            starts.append(g)
        if idx > 50 * max_starts and len(starts) >= max_starts:
            break
    if len(starts) > max_starts:
        pick = np.linspace(0, len(starts) - 1, max_starts).round().astype(int)
        starts = [starts[i] for i in pick]
    return starts, total


def brute_force_pgw(problem: PgwProblem, grid_step=None, refine_iters=200, max_starts=64):
    """Global optimum of a tiny partial GW problem (``n m <= 9``).

    The exact part enumerates every face of the feasible polytope: for each
    support and set of tight marginals it solves for the stationary point of
    the objective on that face, keeping it when the restricted Hessian is
    positive definite and the point is feasible.  A minimizer sits at such a
    point on some face, so the best one found is the global minimum.  Grid
    starts refined by Frank-Wolfe are run as well and can only lower the
    reported value.
    """
    n, m = problem.shape
    if n * m > PGW_CAP:
        raise ValueError(f"oracle refused: n*m = {n * m} > {PGW_CAP}")
    p, q, lam = problem.p, problem.q, problem.lam
    tensor = DenseTensor.from_problem(problem)
    quad = tensor.values.reshape(n * m, n * m) - 2.0 * lam
    quad = 0.5 * (quad + quad.T)
    free = [k for k in range(n * m) if p[k // m] > 0 and q[k % m] > 0]
    val, x, checked = _face_minima(quad, p, q, free)
    best = x.reshape(n, m)

    starts_used = 0
    if not problem.dense_only:
        if grid_step is None:
            grid_step = 0.25 * min(p.sum(), q.sum())
        decomp = CostDecomposition.from_problem(problem)
        cfg = FwConfig(max_iters=refine_iters, tol=1e-14, reduction=False)
        starts, _ = _grid_starts(p, q, grid_step, max_starts)
        for g0 in starts:
            rep = _fw_run(problem, cfg, decomp, g0, "v1")
            starts_used += 1
            cand = rep.plan.matrix
            cval = float(cand.ravel() @ quad @ cand.ravel())
            if cval < val - 1e-15:
                val, best = cval, cand

    const = lam * (p.sum() ** 2 + q.sum() ** 2)
    plan = TransportPlan(best)
    grad = 2.0 * (quad @ plan.matrix.ravel()).reshape(n, m)
    direction, _ = solve_pot_linear(grad, p, q, reduction=False)
    cert = max(float(np.vdot(grad, plan.matrix - direction)), 0.0)
    return OracleResult(plan, val + const, starts_used, cert, checked)
