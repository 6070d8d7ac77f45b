"""Network simplex kernel for the dense balanced transportation problem.

Nodes ``0..n-1`` are sources, ``n..n+m-1`` sinks and ``n+m`` an artificial
root.  Arc ``k < n*m`` joins source ``k // m`` to sink ``n + k % m``; arc
``n*m + v`` is the artificial arc between node ``v`` and the root.  The
initial basis routes every supply through the root on artificial arcs of
cost ``art``; those arcs are never priced, so once they leave they stay out.

Cycling is ruled out by keeping the tree strongly feasible: every zero-flow
tree arc points away from the root, and ties for the leaving arc go to the
last blocking arc met when walking the pivot cycle from its apex.

The same source runs compiled (numba) or interpreted.  Interpreted, pricing
switches to a vectorized numpy scan that picks the same entering arc.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit

PRICE_BLOCK = 0
PRICE_FIRST = 1

STATUS_OPTIMAL = 0
STATUS_ITER_LIMIT = 1


@njit
def _price_loop(cost, pi, in_tree, n, m, start, block, mode, eps):
    n_arcs = n * m
    best = -eps
    k_best = -1
    if mode == PRICE_FIRST:
        for k in range(n_arcs):
            if in_tree[k]:
                continue
            rc = cost[k] + pi[k // m] - pi[n + k % m]
            if rc < best:
                return k
        return -1
    cnt = 0
    for step in range(n_arcs):
        k = start + step
        if k >= n_arcs:
            k -= n_arcs
        if not in_tree[k]:
            rc = cost[k] + pi[k // m] - pi[n + k % m]
            if rc < best:
                best = rc
                k_best = k
        cnt += 1
        if cnt == block:
            if k_best >= 0:
                return k_best
            cnt = 0
    return k_best


def _price_numpy(cost, pi, in_tree, n, m, start, block, mode, eps):
    n_arcs = n * m
    rc = ((cost.reshape(n, m) + pi[:n, None]) - pi[None, n : n + m]).ravel()
    ok = (rc < -eps) & ~in_tree[:n_arcs]
    if mode == PRICE_FIRST:
        hits = np.flatnonzero(ok)
        return int(hits[0]) if hits.size else -1
    order = np.roll(np.arange(n_arcs), -start)
    ok_r = ok[order]
    hits = np.flatnonzero(ok_r)
    if not hits.size:
        return -1
    b0 = (hits[0] // block) * block
    seg = order[b0 : b0 + block]
    vals = np.where(ok[seg], rc[seg], np.inf)
    return int(seg[int(np.argmin(vals))])


_price = _price_loop if NUMBA_ENABLED else _price_numpy


@njit
def _arc_cost(k, cost, n_arcs, art):
    if k < n_arcs:
        return cost[k]
    return art


@njit
def _arc_src(k, n, m, root, art_up):
    n_arcs = n * m
    if k < n_arcs:
        return k // m
    v = k - n_arcs
    return v if art_up[v] else root


@njit
def _unlink(w, parent, first_child, next_sib, prev_sib):
    pw = prev_sib[w]
    nw = next_sib[w]
    if pw >= 0:
        next_sib[pw] = nw
    else:
        first_child[parent[w]] = nw
    if nw >= 0:
        prev_sib[nw] = pw


@njit
def _link(w, par, first_child, next_sib, prev_sib):
    head = first_child[par]
    next_sib[w] = head
    prev_sib[w] = -1
    if head >= 0:
        prev_sib[head] = w
    first_child[par] = w


@njit
def network_simplex(cost, supply, demand, max_iter, mode, eps_scale):
    """Solve ``min <cost, x>`` over ``x >= 0`` with row sums ``supply`` and
    column sums ``demand`` (assumed balanced).

    Returns ``(flow, alpha, beta, iterations, status, art_flow)`` where
    ``alpha``/``beta`` are dual potentials with ``alpha_i + beta_j <= cost_ij``
    and ``art_flow`` is the mass left on artificial arcs.
    """
    n = supply.shape[0]
    m = demand.shape[0]
    n_arcs = n * m
    n_nodes = n + m + 1
    root = n + m
    c = cost.ravel()

    cmax = 0.0
    for k in range(n_arcs):
        a = abs(c[k])
        if a > cmax:
            cmax = a
    art = 2.0 * n_nodes * cmax if cmax > 0 else 1.0
    eps = eps_scale * art

    flow = np.zeros(n_arcs + n_nodes - 1)
    in_tree = np.zeros(n_arcs + n_nodes - 1, dtype=np.bool_)
    art_up = np.zeros(n_nodes - 1, dtype=np.bool_)
    parent = np.full(n_nodes, -1, dtype=np.int64)
    pred = np.full(n_nodes, -1, dtype=np.int64)
    up = np.zeros(n_nodes, dtype=np.bool_)
    depth = np.zeros(n_nodes, dtype=np.int64)
    pi = np.zeros(n_nodes)
    first_child = np.full(n_nodes, -1, dtype=np.int64)
    next_sib = np.full(n_nodes, -1, dtype=np.int64)
    prev_sib = np.full(n_nodes, -1, dtype=np.int64)
    stack = np.empty(n_nodes, dtype=np.int64)

    for v in range(n_nodes - 1):
        s = supply[v] if v < n else -demand[v - n]
        k = n_arcs + v
        parent[v] = root
        pred[v] = k
        depth[v] = 1
        in_tree[k] = True
        if s > 0:
            art_up[v] = True
            up[v] = True
            flow[k] = s
            pi[v] = -art
        else:
            flow[k] = -s
            pi[v] = art
        _link(v, root, first_child, next_sib, prev_sib)

    block = max(10, int(np.sqrt(n_arcs)))
    start = 0
    it = 0
    status = STATUS_OPTIMAL
    while True:
        k_in = _price(c, pi, in_tree, n, m, start, block, mode, eps)
        if k_in < 0:
            break
        if it >= max_iter:
            status = STATUS_ITER_LIMIT
            break
        it += 1
        start = k_in + 1
        if start >= n_arcs:
            start = 0
        first = k_in // m
        second = n + k_in % m

        # apex of the cycle
        a = first
        b = second
        while depth[a] > depth[b]:
            a = parent[a]
        while depth[b] > depth[a]:
            b = parent[b]
        while a != b:
            a = parent[a]
            b = parent[b]
        join = a

        # leaving arc: last blocking arc in cycle order from the apex
        delta = np.inf
        u_out = -1
        side = 0
        u = first
        while u != join:
            if up[u]:
                d = flow[pred[u]]
                if d < delta:
                    delta = d
                    u_out = u
                    side = 1
            u = parent[u]
        u = second
        while u != join:
            if not up[u]:
                d = flow[pred[u]]
                if d <= delta:
                    delta = d
                    u_out = u
                    side = 2
            u = parent[u]

        if delta > 0:
            u = first
            while u != join:
                if up[u]:
                    flow[pred[u]] -= delta
                else:
                    flow[pred[u]] += delta
                u = parent[u]
            u = second
            while u != join:
                if up[u]:
                    flow[pred[u]] += delta
                else:
                    flow[pred[u]] -= delta
                u = parent[u]
        k_out = pred[u_out]
        flow[k_out] = 0.0
        flow[k_in] = delta
        in_tree[k_out] = False
        in_tree[k_in] = True

        if side == 1:
            u_in = first
            v_in = second
        else:
            u_in = second
            v_in = first

        # re-hang the path u_in .. u_out below v_in
        w = u_in
        new_par = v_in
        new_pred = k_in
        new_up = _arc_src(k_in, n, m, root, art_up) == u_in
        while True:
            old_par = parent[w]
            old_pred = pred[w]
            old_up = up[w]
            _unlink(w, parent, first_child, next_sib, prev_sib)
            parent[w] = new_par
            pred[w] = new_pred
            up[w] = new_up
            _link(w, new_par, first_child, next_sib, prev_sib)
            if w == u_out:
                break
            new_par = w
            new_pred = old_pred
            new_up = not old_up
            w = old_par

        # refresh depth and potentials on the moved subtree
        top = 0
        stack[0] = u_in
        top = 1
        while top > 0:
            top -= 1
            x = stack[top]
            px = parent[x]
            depth[x] = depth[px] + 1
            ck = _arc_cost(pred[x], c, n_arcs, art)
            if up[x]:
                pi[x] = pi[px] - ck
            else:
                pi[x] = pi[px] + ck
            ch = first_child[x]
            while ch >= 0:
                stack[top] = ch
                top += 1
                ch = next_sib[ch]

    art_flow = 0.0
    for k in range(n_arcs, n_arcs + n_nodes - 1):
        art_flow += flow[k]
    alpha = -pi[:n].copy()
    beta = pi[n : n + m].copy()
    return flow[:n_arcs].reshape(n, m).copy(), alpha, beta, it, status, art_flow
