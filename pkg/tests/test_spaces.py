import json

import numpy as np
import pytest

from pgw import (
    InputError,
    MmSpace,
    PgwProblem,
    TransportPlan,
    build_mm_space,
    load_mm_space,
    validate_plan,
)
from pgw.spaces import read_csv_points


def test_two_points_at_unit_distance():
    sp = build_mm_space([[0.0, 0.0], [1.0, 0.0]], exponent=2.0)
    np.testing.assert_array_equal(sp.cost_matrix, [[0, 1], [1, 0]])
    np.testing.assert_allclose(sp.weights, [0.5, 0.5])


def test_single_point():
    sp = build_mm_space([[3.0, -1.0]], [7.0])
    np.testing.assert_array_equal(sp.cost_matrix, [[0.0]])
    assert sp.mass == 7.0


@pytest.mark.parametrize("exponent", [1.0, 2.0, 3.0])
def test_costs_match_double_loop(rng, exponent):
    pts = rng.normal(size=(4, 2))
    sp = build_mm_space(pts, exponent=exponent)
    ref = np.zeros((4, 4))
    for i in range(4):
        for k in range(4):
            ref[i, k] = np.sqrt(((pts[i] - pts[k]) ** 2).sum()) ** exponent
    np.testing.assert_allclose(sp.cost_matrix, ref, atol=1e-12)
    assert np.array_equal(sp.cost_matrix, sp.cost_matrix.T)


def test_space_is_read_only():
    sp = build_mm_space([[0.0], [1.0]])
    with pytest.raises(ValueError):
        sp.weights[0] = 1.0


@pytest.mark.parametrize(
    "points, weights, match",
    [
        (np.zeros((0, 2)), None, "empty"),
        ([[0.0], [1.0]], [0.5, -0.1], "index 1"),
        ([[0.0, 1.0], [np.nan, 2.0]], None, "point 1"),
    ],
)
def test_build_rejects_bad_input(points, weights, match):
    with pytest.raises(ValueError, match=match):
        build_mm_space(points, weights)


def test_mm_space_validation():
    with pytest.raises(ValueError, match="symmetric"):
        MmSpace(np.ones(2), np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError, match="diagonal"):
        MmSpace(np.ones(2), np.array([[1.0, 1.0], [1.0, 0.0]]))


def test_product_plan_feasible():
    p = np.array([0.2, 0.5, 0.1])
    q = np.array([0.3, 0.3])
    g = np.outer(p, q) / max(p.sum(), q.sum())
    assert validate_plan(g, p, q).feasible


def test_doubled_product_violates_every_row():
    p = np.full(3, 1 / 3)
    q = np.full(2, 0.5)
    check = validate_plan(2 * np.outer(p, q), p, q)
    assert not check.feasible
    assert np.all(check.row_violation > 0)
    # columns overshoot by 0.5, rows by 1/3
    assert check.max_violation == pytest.approx(0.5)


def test_zero_plan():
    plan = TransportPlan(np.zeros((2, 3)))
    assert plan.total_mass == 0.0
    assert validate_plan(plan, np.ones(2), np.ones(3)).feasible


def test_plan_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        validate_plan(np.zeros((2, 2)), np.ones(3), np.ones(2))


def test_plan_marginals():
    plan = TransportPlan([[0.1, 0.2], [0.0, 0.3]])
    np.testing.assert_allclose(plan.row_marginal, [0.3, 0.3])
    np.testing.assert_allclose(plan.col_marginal, [0.1, 0.5])
    with pytest.raises(ValueError, match="negative"):
        TransportPlan([[-1e-6]])


def test_problem_requires_positive_lambda():
    sp = build_mm_space([[0.0]])
    with pytest.raises(ValueError):
        PgwProblem(sp, sp, 0.0)
    assert PgwProblem(sp, sp, 1.0).loss.name == "square"


def test_csv_with_weight_header(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("x,y,weight\n0,0,0.25\n1,0,0.75\n")
    sp = load_mm_space(f)
    np.testing.assert_allclose(sp.weights, [0.25, 0.75])
    np.testing.assert_allclose(sp.cost_matrix, [[0, 1], [1, 0]])


def test_csv_without_header_is_all_coordinates(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("0,0,0\n1,1,1\n")
    pts, w = read_csv_points(f)
    assert pts.shape == (2, 3) and w is None


def test_csv_error_names_line_and_column(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("x,y\n0,0\n1,oops\n")
    with pytest.raises(InputError, match=r"bad.csv:3:2"):
        load_mm_space(f)


def test_csv_ragged_row(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("0,0\n1\n")
    with pytest.raises(InputError, match=r":2: expected 2 columns"):
        load_mm_space(f)


def test_json_roundtrip(tmp_path):
    f = tmp_path / "a.json"
    f.write_text(json.dumps({"points": [[0, 0], [0, 2]], "weights": [1, 3]}))
    sp = load_mm_space(f, exponent=1.0)
    np.testing.assert_allclose(sp.cost_matrix, [[0, 2], [2, 0]])
    assert sp.mass == 4.0


def test_json_syntax_error(tmp_path):
    f = tmp_path / "a.json"
    f.write_text('{"points": [[0, 0],\n [1, }')
    with pytest.raises(InputError, match=r"a.json:2:"):
        load_mm_space(f)


def test_negative_weight_from_file(tmp_path):
    f = tmp_path / "a.json"
    f.write_text(json.dumps({"points": [[0], [1]], "weights": [1, -1]}))
    with pytest.raises(InputError, match="index 1"):
        load_mm_space(f)
