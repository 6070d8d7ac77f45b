"""Both kernel backends must give the same answers.

The backend is fixed at import time, so the pure-numpy side runs in a
subprocess with ``PGW_DISABLE_NUMBA=1``.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

import pgw

PROBE = r"""
import json
import numpy as np
import pgw
from pgw.oracle import enumerate_partial_vertices

rng = np.random.default_rng(21)
out = {"backend": pgw.BACKEND, "ot": [], "verts": [], "solve": []}
for _ in range(5):
    a = rng.random(6)
    b = rng.random(7)
    b *= a.sum() / b.sum()
    sol = pgw.solve_ot(pgw.LpInstance(rng.normal(size=(6, 7)), a, b))
    out["ot"].append(sol.objective)
out["verts"] = enumerate_partial_vertices(rng.random(3), rng.random(3)).tolist()
for _ in range(3):
    x = pgw.build_mm_space(rng.random((8, 2)))
    y = pgw.build_mm_space(rng.random((9, 3)))
    rep = pgw.solve_v1(pgw.PgwProblem(x, y, 0.5), pgw.FwConfig(tol=1e-9))
    out["solve"].append([rep.pgw_value, rep.iterations])
print(json.dumps(out))
"""


def _probe(disable):
    env = dict(os.environ)
    env["PGW_DISABLE_NUMBA"] = "1" if disable else "0"
    res = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, timeout=300)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout)


@pytest.fixture(scope="module")
def outputs():
    return _probe(False), _probe(True)


def test_flag_selects_backend(outputs):
    fast, slow = outputs
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"


def test_lp_objectives_agree(outputs):
    fast, slow = outputs
    np.testing.assert_allclose(fast["ot"], slow["ot"], atol=1e-12)


def test_vertex_sets_agree(outputs):
    fast, slow = outputs
    np.testing.assert_allclose(np.array(fast["verts"]), np.array(slow["verts"]), atol=1e-14)


def test_solver_runs_agree(outputs):
    fast, slow = outputs
    for (v1, k1), (v2, k2) in zip(fast["solve"], slow["solve"]):
        assert k1 == k2
        assert v1 == pytest.approx(v2, abs=1e-12)


def test_import_backend_matches_env():
    flag = os.environ.get("PGW_DISABLE_NUMBA", "").strip().lower()
    expected = "numba" if flag in ("", "0", "false", "no", "off") else "numpy"
    assert pgw.BACKEND == expected
