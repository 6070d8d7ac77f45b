import numpy as np
import pytest
from conftest import random_problem

from pgw import (
    FwConfig,
    LpInstance,
    MmSpace,
    PgwProblem,
    build_mm_space,
    pgw_value,
    solve_ot,
    solve_v1,
    threshold_mass,
)
from pgw.oracle import (
    brute_force_pgw,
    enumerate_partial_vertices,
    enumerate_transport_vertices,
    min_partial_linear,
)


def test_transport_single_vertex():
    verts = enumerate_transport_vertices(LpInstance([[1.0]], [0.4], [0.4]))
    np.testing.assert_allclose(verts, [[[0.4]]])


def test_transport_two_by_two_uniform():
    verts = enumerate_transport_vertices(LpInstance(np.zeros((2, 2)), [0.5, 0.5], [0.5, 0.5]))
    got = sorted(map(tuple, verts.reshape(-1, 4).round(12)))
    assert got == [(0.0, 0.5, 0.5, 0.0), (0.5, 0.0, 0.0, 0.5)]


def test_transport_vertices_vs_lp(rng):
    for _ in range(20):
        a = rng.random(2)
        b = rng.random(3)
        b *= a.sum() / b.sum()
        inst = LpInstance(rng.normal(size=(2, 3)), a, b)
        verts = enumerate_transport_vertices(inst)
        for v in verts:
            np.testing.assert_allclose(v.sum(axis=1), a, atol=1e-12)
            np.testing.assert_allclose(v.sum(axis=0), b, atol=1e-12)
        best = np.einsum("kij,ij->k", verts, inst.cost).min()
        assert solve_ot(inst).objective == pytest.approx(best, abs=1e-12)


def test_partial_vertices_of_unit_square():
    # {0 <= g <= 1} for one cell: vertices 0 and min(p, q)
    verts = enumerate_partial_vertices([1.0], [0.5])
    assert sorted(verts.ravel().tolist()) == [0.0, 0.5]


def test_partial_vertex_count_two_by_two():
    # the zero plan, four single cells, two diagonals and two mixed plans
    verts = enumerate_partial_vertices([1.0, 1.0], [1.0, 1.0])
    assert verts.shape[0] == 7
    assert min_partial_linear(-np.ones((2, 2)), [1.0, 1.0], [1.0, 1.0])[0] == pytest.approx(-2.0)


def test_size_caps():
    with pytest.raises(ValueError, match="refused"):
        enumerate_transport_vertices(LpInstance(np.zeros((4, 5)), np.full(4, 0.25), np.full(5, 0.2)))
    with pytest.raises(ValueError, match="refused"):
        enumerate_partial_vertices(np.ones(5), np.ones(4))
    sp = build_mm_space(np.arange(4.0))
    with pytest.raises(ValueError, match="refused"):
        brute_force_pgw(PgwProblem(sp, build_mm_space(np.arange(3.0)), 1.0))


def test_identical_single_points():
    sp = build_mm_space([[0.0]], [0.3])
    res = brute_force_pgw(PgwProblem(sp, sp, 1.0))
    assert res.best_value == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(res.best_plan.matrix, [[0.3]])


def test_single_points_full_mass():
    # scalar objective -2 lam g^2 on [0, min(p, q)] is minimized at the end
    x = build_mm_space([[0.0]], [0.4])
    y = build_mm_space([[5.0]], [0.7])
    res = brute_force_pgw(PgwProblem(x, y, 0.5))
    np.testing.assert_allclose(res.best_plan.matrix, [[0.4]])
    assert res.certificate == 0.0


def test_not_above_solver(rng):
    for _ in range(20):
        prob = random_problem(rng, 2, 2)
        res = brute_force_pgw(prob)
        assert res.best_value <= solve_v1(prob).pgw_value + 1e-9
        assert res.best_value == pytest.approx(pgw_value(prob, res.best_plan), abs=1e-12)


def test_certificate_small_at_optimum(rng):
    for _ in range(10):
        res = brute_force_pgw(random_problem(rng, 3, 3))
        assert res.certificate <= 1e-9
        assert res.faces_checked > 1


def test_face_enumeration_alone_is_exact(rng):
    # disable the grid stage: faces alone must match grid-plus-refinement
    for _ in range(10):
        prob = random_problem(rng, 2, 3)
        both = brute_force_pgw(prob)
        faces = brute_force_pgw(prob, max_starts=0)
        assert faces.starts_used == 0
        assert faces.best_value == pytest.approx(both.best_value, abs=1e-12)


def test_threshold_rule_counterexample():
    """Mass on a quadruple with cost above 2 lam at a certified optimum.

    Two unit-mass source points and one target point of mass 2, with
    ``CX = sqrt(2.5)`` off the diagonal so the cross quadruples have
    ``M = 2.5 > 2 lam``.  Moving both source points costs
    ``<M o g, g> = 2 * 2.5``, yet the penalty term ``-2 lam |g|^2`` rewards
    the extra unit more than the cross cost charges.
    """
    lam = 1.0
    c = np.sqrt(2.5)
    x = MmSpace(np.ones(2), np.array([[0.0, c], [c, 0.0]]))
    y = MmSpace(np.array([2.0]), np.zeros((1, 1)))
    prob = PgwProblem(x, y, lam)
    res = brute_force_pgw(prob)
    np.testing.assert_allclose(res.best_plan.matrix, [[1.0], [1.0]], atol=1e-12)
    # objective_tilde: 5 - 2 * 4 = -3 versus -2 for a single unit
    assert res.best_value - lam * (2.0**2 + 2.0**2) == pytest.approx(-3.0)
    assert res.certificate == 0.0
    assert threshold_mass(prob, res.best_plan) == pytest.approx(2.0)
    # the solver agrees from the product start
    rep = solve_v1(prob, FwConfig(tol=1e-12))
    assert rep.pgw_value == pytest.approx(res.best_value, abs=1e-12)
