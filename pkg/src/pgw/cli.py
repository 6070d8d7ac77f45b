"""``pgw`` command line: solve, match-shapes, pu-demo, bench.

Exit codes: 0 converged, 1 usage or I/O error, 2 iteration limit reached.
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import experiments as ex
from ._accel import apply_thread_cap
from .solver import FwConfig, solve
from .spaces import InputError, PgwProblem, load_mm_space

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ITER_LIMIT = 2
DENSE_PLAN_MAX = 200


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _common(p, lam=1.0, line_search="exact", init="product", max_iters=1000):
    p.add_argument("--lambda", dest="lam", type=_positive, default=lam, help="mass penalty (default %(default)s)")
    p.add_argument("--solver", choices=("v1", "v2"), default="v1")
    p.add_argument("--max-iters", type=int, default=max_iters)
    p.add_argument("--tol", type=_positive, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("product", "flb-pot"), default=init)
    p.add_argument("--reduction", choices=("on", "off"), default="on")
    p.add_argument("--line-search", choices=("exact", "unit"), default=line_search)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    parser = _Parser(prog="pgw", description="Partial Gromov-Wasserstein solver")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve PGW between two point clouds")
    s.add_argument("source", help="CSV or JSON point cloud")
    s.add_argument("target", help="CSV or JSON point cloud")
    s.add_argument("--exponent", type=_positive, default=2.0, help="cost is distance**exponent")
    _common(s)

    m = sub.add_parser("match-shapes", help="2D/3D mixture shape matching")
    m.add_argument("--n-per-shape", type=int, default=60)
    m.add_argument("--mixture-2d", type=float, nargs=2, default=(0.3, 0.7))
    m.add_argument("--mixture-3d", type=float, nargs=2, default=(0.5, 0.5))
    m.add_argument("--exponent", type=_positive, default=1.0)
    m.add_argument("--threshold", type=float, default=None, help="default 0.5/(n m)")
    m.add_argument("--starts", type=int, default=8, help="localized starts")
    _common(m)

    u = sub.add_parser("pu-demo", help="synthetic positive-unlabeled task")
    u.add_argument("--n", type=int, default=100)
    u.add_argument("--m", type=int, default=500)
    u.add_argument("--pi", type=float, default=0.2)
    u.add_argument("--dim", type=int, default=6)
    _common(u, lam=1000.0, line_search="unit", init="flb-pot")

    b = sub.add_parser("bench", help="timing table over sizes and penalties")
    b.add_argument("--sizes", type=int, nargs="+", default=[10, 50, 100])
    b.add_argument("--lambdas", type=_positive, nargs="+", default=list(ex.BENCH_LAMBDAS))
    b.add_argument("--parallel", action="store_true")
    _common(b)
    b.set_defaults(format="csv")
    return parser


def _fw_config(args):
    return FwConfig(
        solver_variant=args.solver,
        max_iters=args.max_iters,
        tol=args.tol,
        line_search=args.line_search,
        reduction=args.reduction == "on",
        seed=args.seed,
    )


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _triples(g):
    ii, jj = np.nonzero(g > 0)
    return [[int(i), int(j), float(g[i, j])] for i, j in zip(ii, jj)]


def _plan_json(g):
    n, m = g.shape
    if n <= DENSE_PLAN_MAX and m <= DENSE_PLAN_MAX:
        return g.tolist()
    return {"shape": [n, m], "triples": _triples(g)}


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _code(report):
    return EXIT_OK if report.converged else EXIT_ITER_LIMIT


def cmd_solve(args):
    source = load_mm_space(args.source, args.exponent)
    target = load_mm_space(args.target, args.exponent)
    problem = PgwProblem(source, target, args.lam)
    init = ex.flb_pot_init(source, target, args.lam) if args.init == "flb-pot" else None
    rep = solve(problem, _fw_config(args), init)
    g = rep.plan.matrix
    if args.format == "csv":
        text = _csv(("i", "j", "mass"), _triples(g))
    else:
        doc = {
            "pgw_value": rep.pgw_value,
            "transported_mass": rep.transported_mass,
            "iterations": rep.iterations,
            "termination": rep.termination,
            "stop_reason": rep.stop_reason,
            "solver": rep.variant,
            "gap_trace": rep.gap_trace.tolist(),
            "objective_trace": rep.objective_trace.tolist(),
            "plan": _plan_json(g),
            "seed": args.seed,
        }
        text = json.dumps(doc) + "\n"
    _emit(text, args.out)
    return _code(rep)


def cmd_match_shapes(args):
    cfg = ex.ShapeConfig(
        n_per_shape=args.n_per_shape,
        mixture_2d=tuple(args.mixture_2d),
        mixture_3d=tuple(args.mixture_3d),
        seed=args.seed,
        exponent=args.exponent,
    )
    source, target, lx, ly = ex.gen_shapes_labeled(cfg)
    res = ex.match_shapes(
        (source, target), args.lam, _fw_config(args), args.threshold, (lx, ly), args.seed, args.starts
    )
    if args.format == "csv":
        text = _csv(("i", "j", "mass"), res.pairs)
    else:
        doc = res.to_json()
        doc["component_flow"] = res.flow.tolist()
        text = json.dumps(doc) + "\n"
    _emit(text, args.out)
    return _code(res.report)


def cmd_pu_demo(args):
    cfg = ex.PuConfig(
        n_positive=args.n,
        m_unlabeled=args.m,
        pi=args.pi,
        init=args.init,
        lam=args.lam,
        seed=args.seed,
        dim=args.dim,
        line_search=args.line_search,
        max_iters=args.max_iters,
    )
    res = ex.run_pu(cfg)
    doc = {
        "accuracy": res.accuracy,
        "pgw_value": res.report.pgw_value,
        "transported_mass": res.report.transported_mass,
        "iterations": res.report.iterations,
        "seed": args.seed,
    }
    if args.format == "csv":
        text = _csv(tuple(doc), [tuple(doc.values())])
    else:
        text = json.dumps(doc) + "\n"
    _emit(text, args.out)
    return _code(res.report)


def cmd_bench(args):
    rows = ex.run_benchmark(sorted(args.sizes), args.lambdas, _fw_config(args), args.seed, args.parallel)
    if args.format == "csv":
        text = ex.bench_csv(rows)
    else:
        text = json.dumps([dict(zip(ex.BENCH_HEADER, r.as_tuple())) for r in rows]) + "\n"
    _emit(text, args.out)
    return EXIT_OK if all(r.converged for r in rows) else EXIT_ITER_LIMIT


COMMANDS = {
    "solve": cmd_solve,
    "match-shapes": cmd_match_shapes,
    "pu-demo": cmd_pu_demo,
    "bench": cmd_bench,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    apply_thread_cap()
    try:
        return COMMANDS[args.command](args)
    except (InputError, OSError, ValueError) as exc:
        print(f"pgw: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
