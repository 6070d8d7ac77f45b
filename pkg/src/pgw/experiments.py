"""Desk-scale drivers: 2D/3D shape matching, synthetic PU learning, timing.

All randomness goes through ``numpy.random.default_rng(seed)``.
"""

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lp import solve_pot_linear
from .solver import FwConfig, solve, solve_v1, solve_v2
from .spaces import MmSpace, PgwProblem, TransportPlan, build_mm_space

SHAPE_OFFSET = 5.0
BENCH_LAMBDAS = (0.2, 1.0, 10.0)
BENCH_HEADER = ("n", "lambda", "variant", "iters", "seconds", "pgw_value", "mass")


# -- shape matching ----------------------------------------------------------


@dataclass(frozen=True)
class ShapeConfig:
    """Mixtures ``a * square + b * circle`` (2D) and ``a * cube + b * sphere`` (3D)."""

    n_per_shape: int = 60
    mixture_2d: tuple = (0.3, 0.7)
    mixture_3d: tuple = (0.5, 0.5)
    seed: int = 0
    exponent: float = 1.0

    def __post_init__(self):
        if self.n_per_shape < 1:
            raise ValueError("n_per_shape must be >= 1")
        for mix in (self.mixture_2d, self.mixture_3d):
            if len(mix) != 2 or min(mix) < 0 or abs(sum(mix) - 1.0) > 1e-12:
                raise ValueError(f"mixture weights must be nonnegative and sum to 1, got {mix}")


def _unit_sphere(rng, n, dim):
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _mixture(rng, n, dim, weights):
    """Solid component, then a unit sphere shifted along the first axis."""
    solid = rng.uniform(-1.0, 1.0, size=(n, dim))
    shell = _unit_sphere(rng, n, dim)
    shell[:, 0] += SHAPE_OFFSET
    pts, w, lab = [], [], []
    for k, (block, weight) in enumerate(zip((solid, shell), weights)):
        # zero-weight components are dropped, not kept as massless points
        if weight > 0:
            pts.append(block)
            w.append(np.full(n, weight / n))
            lab.append(np.full(n, k))
    return np.vstack(pts), np.concatenate(w), np.concatenate(lab)


def gen_shapes(config: ShapeConfig):
    """Sample the 2D and 3D mixtures.

    Returns
    -------
    source, target : MmSpace
        2D square/circle mixture and 3D cube/sphere mixture.
    """
    source, target, _, _ = gen_shapes_labeled(config)
    return source, target


def gen_shapes_labeled(config: ShapeConfig):
    """As :func:`gen_shapes`, plus per-point component labels (0 solid, 1 shell)."""
    rng = np.random.default_rng(config.seed)
    x, p, lx = _mixture(rng, config.n_per_shape, 2, config.mixture_2d)
    y, q, ly = _mixture(rng, config.n_per_shape, 3, config.mixture_3d)
    return (
        build_mm_space(x, p, config.exponent),
        build_mm_space(y, q, config.exponent),
        lx,
        ly,
    )


@dataclass
class MatchResult:
    pairs: list
    flow: np.ndarray
    pgw_value: float
    report: object
    seed: Optional[int] = None

    def dominant_share(self):
        """Per source component: (target component, share of its transported mass)."""
        out = []
        for row in self.flow:
            total = row.sum()
            k = int(np.argmax(row))
            out.append((k, float(row[k] / total) if total > 0 else 0.0))
        return out

    def to_json(self):
        return {"pairs": self.pairs, "pgw_value": self.pgw_value, "seed": self.seed}


def default_mass_threshold(n, m):
    return 0.5 / (n * m)


def localized_start(source: MmSpace, target: MmSpace, rng, frac=0.25) -> TransportPlan:
    """Product plan on the neighbourhoods of a random anchor pair.

    Anchors are drawn with probability proportional to mass; each
    neighbourhood is the ``ceil(frac * size)`` points nearest its anchor.
    """
    i0 = rng.choice(source.size, p=source.weights / source.mass)
    j0 = rng.choice(target.size, p=target.weights / target.mass)
    a = np.argsort(source.cost_matrix[i0], kind="stable")[: max(1, math.ceil(frac * source.size))]
    b = np.argsort(target.cost_matrix[j0], kind="stable")[: max(1, math.ceil(frac * target.size))]
    pa, qb = source.weights[a], target.weights[b]
    g = np.zeros((source.size, target.size))
    scale = max(pa.sum(), qb.sum())
    if scale > 0:
        g[np.ix_(a, b)] = np.outer(pa, qb) / scale
    return TransportPlan(g)


def match_shapes(
    spaces, lam, config=None, mass_threshold=None, labels=None, seed=0, n_local_starts=8
):
    """Solve PGW between two spaces and list correspondences.

    The product start is run first, then ``n_local_starts`` localized starts
    (:func:`localized_start`); the plan with the lowest PGW value wins, the
    earliest start on ties.  On well separated components the product start
    mixes every component pair and usually falls into the empty plan.

    Parameters
    ----------
    spaces : (MmSpace, MmSpace)
    lam : float
    config : FwConfig, optional
    mass_threshold : float, optional
        Entries of the plan above it are reported; defaults to ``0.5 / (n m)``.
    labels : (array, array), optional
        Component label per point on each side.  The flow summary sums plan
        mass between components; without labels it is a 1x1 total.
    seed : int
        Seeds the localized starts.
    """
    source, target = spaces
    problem = PgwProblem(source, target, lam)
    rng = np.random.default_rng(seed)
    report = solve(problem, config)
    for _ in range(n_local_starts):
        rep = solve(problem, config, localized_start(source, target, rng))
        if rep.pgw_value < report.pgw_value:
            report = rep
    g = report.plan.matrix
    n, m = g.shape
    if mass_threshold is None:
        mass_threshold = default_mass_threshold(n, m)
    ii, jj = np.nonzero(g > mass_threshold)
    pairs = [[int(i), int(j), float(g[i, j])] for i, j in zip(ii, jj)]
    if labels is None:
        lx, ly = np.zeros(n, dtype=int), np.zeros(m, dtype=int)
    else:
        lx, ly = (np.asarray(a, dtype=int) for a in labels)
    flow = np.zeros((lx.max() + 1, ly.max() + 1))
    np.add.at(flow, (lx[:, None], ly[None, :]), g)
    return MatchResult(pairs, flow, report.pgw_value, report, seed)


# -- PU learning -------------------------------------------------------------


def flb_pot_init(source: MmSpace, target: MmSpace, lam) -> TransportPlan:
    """Partial OT start on squared-eccentricity features.

    ``s_X(i) = sum_i' C^X[i, i'] p_i'`` (and likewise for ``Y``); the plan
    minimizes ``sum |s_X(i) - s_Y(j)|^2 g_ij + lam (|p - g 1| + |q - g^T 1|)``,
    which on the partial set is the linear problem with cost shifted by
    ``-2 lam``.  Works across spaces of different dimension.
    """
    sx = source.cost_matrix @ source.weights
    sy = target.cost_matrix @ target.weights
    cost = (sx[:, None] - sy[None, :]) ** 2
    plan, _ = solve_pot_linear(cost - 2.0 * lam, source.weights, target.weights)
    return TransportPlan(plan)


def pu_classify(col_marginal, pi) -> np.ndarray:
    """Label the ``ceil(pi m)`` largest entries of ``col_marginal`` as positive.

    Ties go to the lower index.
    """
    if not 0 < pi < 1:
        raise ValueError("pi must lie in (0, 1)")
    g2 = np.asarray(col_marginal, dtype=np.float64)
    k = math.ceil(pi * g2.size - 1e-12)
    order = np.lexsort((np.arange(g2.size), -g2))
    labels = np.zeros(g2.size, dtype=np.int64)
    labels[order[:k]] = 1
    return labels


@dataclass(frozen=True)
class PuConfig:
    n_positive: int = 100
    m_unlabeled: int = 500
    pi: float = 0.2
    init: str = "flb-pot"
    lam: float = 1000.0
    seed: int = 0
    dim: int = 6
    neg_scale: float = 3.0
    line_search: str = "unit"
    max_iters: int = 1000

    def __post_init__(self):
        if not 0 < self.pi < 1:
            raise ValueError("pi must lie in (0, 1)")
        if self.init not in ("product", "flb-pot"):
            raise ValueError("init must be 'product' or 'flb-pot'")


@dataclass(frozen=True)
class PuTask:
    positives: np.ndarray
    unlabeled: np.ndarray
    labels: np.ndarray


def make_pu_task(config: PuConfig) -> PuTask:
    """Compact positive class inside a diffuse negative one.

    Positives are ``N(0, I)`` and negatives ``N(0, neg_scale^2 I)`` in
    ``dim`` dimensions.  The unlabeled set holds ``round(pi m)`` positives
    drawn independently of the labeled sample (SCAR), shuffled.  In low
    dimension the two classes overlap heavily and no transport-based
    classifier can separate them well.
    """
    rng = np.random.default_rng(config.seed)
    d, m = config.dim, config.m_unlabeled
    labeled = rng.normal(size=(config.n_positive, d))
    n_pos = int(round(config.pi * m))
    pos = rng.normal(size=(n_pos, d))
    neg = config.neg_scale * rng.normal(size=(m - n_pos, d))
    y = np.concatenate([np.ones(n_pos, dtype=np.int64), np.zeros(m - n_pos, dtype=np.int64)])
    perm = rng.permutation(m)
    return PuTask(labeled, np.vstack([pos, neg])[perm], y[perm])


@dataclass
class PuResult:
    accuracy: float
    predicted: np.ndarray
    truth: np.ndarray
    report: object
    seed: int


def run_pu(config: PuConfig, task: Optional[PuTask] = None) -> PuResult:
    """PGW from the labeled positives to the unlabeled set, then quantile labels.

    Weights are ``p_i = pi / n`` and ``q_j = 1 / m``.
    """
    task = task or make_pu_task(config)
    n, m = task.positives.shape[0], task.unlabeled.shape[0]
    source = build_mm_space(task.positives, np.full(n, config.pi / n))
    target = build_mm_space(task.unlabeled, np.full(m, 1.0 / m))
    problem = PgwProblem(source, target, config.lam)
    init = flb_pot_init(source, target, config.lam) if config.init == "flb-pot" else None
    fw = FwConfig(max_iters=config.max_iters, line_search=config.line_search)
    report = solve_v1(problem, fw, init)
    pred = pu_classify(report.plan.col_marginal, config.pi)
    acc = float(np.mean(pred == task.labels))
    return PuResult(acc, pred, task.labels, report, config.seed)


# -- timing ------------------------------------------------------------------


def bench_problem(n, lam, seed):
    """Uniform samples in ``[0,2]^2`` (n points) and ``[0,2]^3`` (n + 100 points),
    both weighted ``1 / (n + 100)``."""
    rng = np.random.default_rng(seed)
    m = n + 100
    x = rng.uniform(0.0, 2.0, size=(n, 2))
    y = rng.uniform(0.0, 2.0, size=(m, 3))
    return PgwProblem(build_mm_space(x, np.full(n, 1.0 / m)), build_mm_space(y, np.full(m, 1.0 / m)), lam)


@dataclass
class BenchRow:
    n: int
    lam: float
    variant: str
    iters: int
    seconds: float
    pgw_value: float
    mass: float
    per_iter: float = field(default=0.0)
    converged: bool = True

    def as_tuple(self):
        return (self.n, self.lam, self.variant, self.iters, self.seconds, self.pgw_value, self.mass)


def _bench_cell(n, lam, config, seed):
    problem = bench_problem(n, lam, seed)
    rows = []
    for variant, fn in (("v1", solve_v1), ("v2", solve_v2)):
        t0 = time.perf_counter()
        rep = fn(problem, config)
        sec = time.perf_counter() - t0
        rows.append(
            BenchRow(
                n, lam, variant, rep.iterations, sec, float(rep.pgw_value),
                float(rep.transported_mass), sec / max(rep.iterations, 1), rep.converged,
            )
        )
    return rows


def run_benchmark(sizes, lambdas=BENCH_LAMBDAS, config=None, seed=0, parallel=False):
    """Time both solvers over a grid of sizes and penalties.

    Returns a list of :class:`BenchRow`, ordered by size, then lambda, then
    variant regardless of ``parallel``.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    config = config or FwConfig(max_iters=1000, tol=1e-5)
    cells = [(n, lam) for n in sizes for lam in lambdas]
    if parallel:
        with ThreadPoolExecutor() as pool:
            chunks = list(pool.map(lambda c: _bench_cell(c[0], c[1], config, seed), cells))
    else:
        chunks = [_bench_cell(n, lam, config, seed) for n, lam in cells]
    return [row for chunk in chunks for row in chunk]


def bench_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in rows:
        w.writerow(r.as_tuple())
    return buf.getvalue()
