"""Metric-measure spaces, partial couplings and point-cloud I/O."""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from .losses import Loss, get_loss

FEAS_TOL = 1e-9
CLAMP_TOL = 1e-12


class InputError(ValueError):
    """Malformed point-cloud input; the message names the location."""


class PlanInfeasibleError(ValueError):
    """A plan violates the partial marginal constraints."""

    def __init__(self, message, violation):
        super().__init__(message)
        self.violation = violation


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MmSpace:
    """Discrete metric-measure space.

    Parameters
    ----------
    weights : array-like, shape (n,)
        Nonnegative point masses; they need not sum to one.
    cost_matrix : array-like, shape (n, n)
        Intra-space cost, ``d(x_i, x_k) ** exponent``.
    points : array-like, shape (n, d), optional
        Coordinates, kept only so experiments can write them back out.
    """

    weights: np.ndarray
    cost_matrix: np.ndarray
    points: Optional[np.ndarray] = None
    exponent: float = 2.0

    def __post_init__(self):
        w = _frozen(self.weights)
        c = _frozen(self.cost_matrix)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if c.shape != (w.size, w.size):
            raise ValueError(f"cost_matrix shape {c.shape} does not match {w.size} weights")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(c)):
            raise ValueError("weights and cost_matrix must be finite")
        bad = np.flatnonzero(w < 0)
        if bad.size:
            raise ValueError(f"negative weight at index {bad[0]}")
        if not np.any(w > 0):
            raise ValueError("at least one weight must be positive")
        if np.any(np.abs(c - c.T) > 1e-12):
            raise ValueError("cost_matrix must be symmetric")
        if np.any(np.diag(c) != 0):
            raise ValueError("cost_matrix must have a zero diagonal")
        if np.any(c < 0):
            raise ValueError("cost_matrix must be nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "cost_matrix", c)
        if self.points is not None:
            pts = _frozen(self.points)
            if pts.ndim != 2 or pts.shape[0] != w.size:
                raise ValueError("points must have shape (n, d)")
            object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def mass(self) -> float:
        return float(self.weights.sum())


def build_mm_space(points, weights=None, exponent: float = 2.0) -> MmSpace:
    """Build a space from coordinates with ``C[i, k] = |x_i - x_k| ** exponent``.

    Missing weights default to uniform ``1/n``.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("empty point set")
    n = pts.shape[0]
    bad = np.argwhere(~np.isfinite(pts))
    if bad.size:
        raise ValueError(f"non-finite coordinate at point {bad[0, 0]}, axis {bad[0, 1]}")
    if exponent < 1:
        raise ValueError("exponent must be >= 1")
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.size != n:
            raise ValueError(f"{w.size} weights for {n} points")
        neg = np.flatnonzero(~(w >= 0))
        if neg.size:
            raise ValueError(f"negative or non-finite weight at index {neg[0]}")
    if exponent == 2.0:
        c = cdist(pts, pts, "sqeuclidean")
    else:
        c = cdist(pts, pts) ** exponent
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 0.0)
    return MmSpace(weights=w, cost_matrix=c, points=pts, exponent=exponent)


@dataclass(frozen=True)
class TransportPlan:
    """Nonnegative ``n x m`` coupling with cached marginals."""

    matrix: np.ndarray
    row_marginal: np.ndarray = field(init=False)
    col_marginal: np.ndarray = field(init=False)
    total_mass: float = field(init=False)

    def __post_init__(self):
        g = np.array(self.matrix, dtype=np.float64, copy=True)
        if g.ndim != 2:
            raise ValueError("a plan must be a 2-d matrix")
        if not np.all(np.isfinite(g)):
            raise ValueError("plan entries must be finite")
        low = g.min() if g.size else 0.0
        if low < -CLAMP_TOL:
            raise ValueError(f"plan has a negative entry {low:.3e}")
        g[g < 0] = 0.0
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)
        object.__setattr__(self, "row_marginal", _frozen(g.sum(axis=1)))
        object.__setattr__(self, "col_marginal", _frozen(g.sum(axis=0)))
        object.__setattr__(self, "total_mass", float(g.sum()))

    @property
    def shape(self):
        return self.matrix.shape


def as_matrix(plan) -> np.ndarray:
    if isinstance(plan, TransportPlan):
        return plan.matrix
    return np.asarray(plan, dtype=np.float64)


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    max_violation: float
    row_violation: np.ndarray
    col_violation: np.ndarray

    def __bool__(self):
        return self.feasible


def validate_plan(plan, p, q, tol: float = FEAS_TOL) -> Feasibility:
    """Check membership of ``plan`` in the partial coupling set of ``(p, q)``.

    Violations are the positive parts of ``row_sums - p``, ``col_sums - q``
    and ``-plan``; the largest of them is reported.
    """
    g = as_matrix(plan)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if g.shape != (p.size, q.size):
        raise ValueError(f"plan shape {g.shape} does not match ({p.size}, {q.size})")
    rows = np.maximum(g.sum(axis=1) - p, 0.0)
    cols = np.maximum(g.sum(axis=0) - q, 0.0)
    neg = max(0.0, -float(g.min())) if g.size else 0.0
    worst = max(float(rows.max(initial=0.0)), float(cols.max(initial=0.0)), neg)
    return Feasibility(worst <= tol, worst, rows, cols)


@dataclass(frozen=True)
class PgwProblem:
    """Partial GW instance: two spaces, penalty ``lam`` and a loss."""

    source: MmSpace
    target: MmSpace
    lam: float
    loss: Union[Loss, str] = "square"
    tol: float = FEAS_TOL

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be positive and finite")
        object.__setattr__(self, "loss", get_loss(self.loss))

    @property
    def p(self):
        return self.source.weights

    @property
    def q(self):
        return self.target.weights

    @property
    def shape(self):
        return self.source.size, self.target.size

    @property
    def dense_only(self) -> bool:
        return not self.loss.factorized

    def transpose(self) -> "PgwProblem":
        return PgwProblem(self.target, self.source, self.lam, self.loss, self.tol)


# -- point-cloud files -------------------------------------------------------

_WEIGHT_NAMES = {"w", "weight", "weights", "mass"}


def _parse_float(text, path, line, col):
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{path}:{line}:{col}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise InputError(f"{path}:{line}:{col}: non-finite value {text!r}")
    return value


def read_csv_points(path, weight_column: Optional[bool] = None):
    """Read ``(points, weights)`` from CSV, one point per row.

    A header row is optional.  The last column is read as the weight when
    ``weight_column`` is True, or, when it is None, when the header names it
    ``weight``/``w``/``mass``.
    """
    path = Path(path)
    rows = []
    header = None
    with path.open(newline="") as fh:
        for line_no, raw in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in raw]
            if not cells or all(c == "" for c in cells):
                continue
            if header is None and not rows:
                try:
                    float(cells[0])
                except ValueError:
                    header = cells
                    continue
            rows.append((line_no, cells))
    if not rows:
        raise InputError(f"{path}: no points found")
    width = len(rows[0][1])
    values = np.empty((len(rows), width))
    for r, (line_no, cells) in enumerate(rows):
        if len(cells) != width:
            raise InputError(f"{path}:{line_no}: expected {width} columns, found {len(cells)}")
        for c, text in enumerate(cells):
            values[r, c] = _parse_float(text, path, line_no, c + 1)
    if weight_column is None:
        weight_column = header is not None and header[-1].lower() in _WEIGHT_NAMES
    if weight_column:
        if width < 2:
            raise InputError(f"{path}: a weight column needs at least one coordinate column")
        return values[:, :-1], values[:, -1]
    return values, None


def read_json_points(path):
    """Read ``{"points": [[...], ...], "weights": [...]}``; weights optional."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "points" not in doc:
        raise InputError(f"{path}: expected an object with a 'points' key")
    pts = doc["points"]
    if not isinstance(pts, list) or not pts:
        raise InputError(f"{path}: 'points' must be a non-empty list")
    try:
        points = np.array(pts, dtype=np.float64)
    except (TypeError, ValueError):
        raise InputError(f"{path}: 'points' must be a rectangular list of numbers") from None
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2:
        raise InputError(f"{path}: 'points' must be a list of coordinate lists")
    weights = doc.get("weights")
    if weights is not None:
        try:
            weights = np.array(weights, dtype=np.float64)
        except (TypeError, ValueError):
            raise InputError(f"{path}: 'weights' must be a list of numbers") from None
        if weights.shape != (points.shape[0],):
            raise InputError(f"{path}: {weights.size} weights for {points.shape[0]} points")
    return points, weights


def load_mm_space(path, exponent: float = 2.0, weight_column: Optional[bool] = None) -> MmSpace:
    """Load a point cloud (``.json`` or CSV) and build its space."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        points, weights = read_json_points(path)
    else:
        points, weights = read_csv_points(path, weight_column)
    try:
        return build_mm_space(points, weights, exponent)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
