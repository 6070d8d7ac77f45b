import csv
import io
import json

import numpy as np
import pytest

from pgw.cli import EXIT_ERROR, EXIT_ITER_LIMIT, EXIT_OK, main
from pgw.experiments import BENCH_HEADER


@pytest.fixture
def cloud(tmp_path):
    rng = np.random.default_rng(3)
    path = tmp_path / "cloud.csv"
    rows = "\n".join(f"{x:.6f},{y:.6f}" for x, y in rng.random((6, 2)))
    path.write_text("x,y\n" + rows + "\n")
    return path


@pytest.fixture
def other(tmp_path):
    rng = np.random.default_rng(4)
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"points": rng.random((5, 3)).tolist(), "weights": [0.1, 0.2, 0.2, 0.3, 0.2]}))
    return path


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_identity(cloud, capsys):
    code, out, _ = _run(["solve", cloud, cloud, "--lambda", "1"], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["pgw_value"] <= 1e-8
    assert doc["transported_mass"] == pytest.approx(1.0)
    assert len(doc["plan"]) == 6 and doc["seed"] == 0


def test_solve_v1_v2_agree(cloud, other, capsys):
    _, out1, _ = _run(["solve", cloud, other, "--solver", "v1", "--tol", "1e-9"], capsys)
    _, out2, _ = _run(["solve", cloud, other, "--solver", "v2", "--tol", "1e-9"], capsys)
    v1, v2 = json.loads(out1), json.loads(out2)
    assert v2["solver"] == "v2"
    assert v1["pgw_value"] == pytest.approx(v2["pgw_value"], abs=1e-9)


def test_solve_writes_file(cloud, other, tmp_path, capsys):
    out = tmp_path / "plan.csv"
    code, stdout, _ = _run(["solve", cloud, other, "--format", "csv", "--out", out], capsys)
    assert code == EXIT_OK and stdout == ""
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["i", "j", "mass"]
    assert all(float(r[2]) > 0 for r in rows[1:])


def test_solve_deterministic(cloud, other, capsys):
    _, a, _ = _run(["solve", cloud, other, "--init", "flb-pot"], capsys)
    _, b, _ = _run(["solve", cloud, other, "--init", "flb-pot"], capsys)
    assert a == b


def test_missing_file(tmp_path, cloud, capsys):
    missing = tmp_path / "nope.csv"
    code, _, err = _run(["solve", missing, cloud], capsys)
    assert code == EXIT_ERROR
    assert str(missing) in err


def test_malformed_file(tmp_path, cloud, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0\n1,x\n")
    code, _, err = _run(["solve", bad, cloud], capsys)
    assert code == EXIT_ERROR
    assert "bad.csv:2:2" in err


def test_bad_lambda(cloud, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", str(cloud), str(cloud), "--lambda", "-1"])
    assert exc.value.code == EXIT_ERROR
    capsys.readouterr()


def test_iteration_limit_exit(cloud, other, capsys):
    code, out, _ = _run(["solve", cloud, other, "--max-iters", "1", "--tol", "1e-14"], capsys)
    assert code == EXIT_ITER_LIMIT
    assert json.loads(out)["termination"] == "iteration-limit"


def test_sparse_plan_above_200(tmp_path, capsys):
    rng = np.random.default_rng(0)
    big = tmp_path / "big.csv"
    big.write_text("\n".join(f"{x},{y}" for x, y in rng.random((201, 2))) + "\n")
    small = tmp_path / "small.csv"
    small.write_text("0,0\n1,0\n")
    _, out, _ = _run(["solve", big, small, "--max-iters", "5"], capsys)
    plan = json.loads(out)["plan"]
    assert plan["shape"] == [201, 2]
    assert all(len(t) == 3 for t in plan["triples"])


def test_bench_single_size(capsys):
    code, out, _ = _run(["bench", "--sizes", "10"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == EXIT_OK
    assert tuple(rows[0]) == BENCH_HEADER
    assert len(rows) == 7
    assert sorted({r[2] for r in rows[1:]}) == ["v1", "v2"]


@pytest.mark.slow
def test_bench_default_sizes(capsys):
    _, out, _ = _run(["bench"], capsys)
    assert len(out.strip().splitlines()) == 19


def test_bench_json(capsys):
    _, out, _ = _run(["bench", "--sizes", "10", "--lambdas", "1", "--format", "json"], capsys)
    doc = json.loads(out)
    assert len(doc) == 2 and set(doc[0]) == set(BENCH_HEADER)


def test_match_shapes(capsys):
    code, out, _ = _run(["match-shapes", "--n-per-shape", "15", "--starts", "2", "--seed", "1"], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["seed"] == 1
    assert np.array(doc["component_flow"]).shape == (2, 2)
    assert all(m > 0.5 / (30 * 30) for _, _, m in doc["pairs"])


def test_pu_demo(capsys):
    code, out, _ = _run(["pu-demo", "--n", "20", "--m", "100", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == EXIT_OK
    assert rows[0][0] == "accuracy"
    assert 0.0 <= float(rows[1][0]) <= 1.0


def test_flb_init_escapes_empty_plan(tmp_path, capsys):
    # the product start stops at the empty plan on this cloud
    path = tmp_path / "tri.csv"
    path.write_text("0,0\n1,0\n0,2\n")
    _, out, _ = _run(["solve", path, path], capsys)
    assert json.loads(out)["transported_mass"] == 0.0
    _, out, _ = _run(["solve", path, path, "--init", "flb-pot"], capsys)
    assert json.loads(out)["pgw_value"] <= 1e-8
