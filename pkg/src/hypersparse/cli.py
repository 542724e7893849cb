"""Command-line interface: ``hypersparse {sparsify,verify,bench,generate}``.

Exit codes: 0 success, 1 usage or I/O error, 2 verification failure.
"""

import argparse
import csv
import io
import json
import sys
import time

from .certify import DEFAULT_CUT_CAP, KINDS, WEIGHT_LAWS, CertReport, generate_random, group_contribution_check, measure_quality
from .errors import InvalidArgument, SolverFailure
from .formats import atomic_write, format_mhg, format_tau, read_hypergraph, read_tau, write_hgr
from .hypergraph import GraphicalHypergraph, clique_expand, unitize
from .leverage import EXACT, SKETCHED, SolverConfig
from .overestimates import DEFAULT_CERT_CAP, certify_overestimates
from .sampler import CHAINING, SCHEDULES, SparsifyConfig, sparsify

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2

BENCH_HEADER = ["epsilon", "r", "constant", "seed", "n", "m", "k", "kept", "expected_kept",
                "max_err_random", "max_err_cuts", "ms"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _epsilon(text):
    x = float(text)
    if not 0.0 < x < 1.0:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1), got {text}")
    return x


def _positive_float(text):
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def _iterations(text):
    if text == "auto":
        return None
    t = int(text)
    if t < 1:
        raise argparse.ArgumentTypeError("iterations must be 'auto' or a positive integer")
    return t


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(p) for p in text.split(",") if p.strip()]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _add_solver_flags(p):
    p.add_argument("--solver", choices=[EXACT, SKETCHED], default=EXACT, help="leverage score backend")
    p.add_argument("--delta", type=float, default=0.25, help="sketch accuracy in (0, 1)")
    p.add_argument("--sketch-rows", type=int, default=None)
    p.add_argument("--cg-tolerance", type=_positive_float, default=1e-10)
    p.add_argument("--cg-max-iter", type=int, default=None)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1, help="threads for sketch blocks (result is unchanged)")
    p.add_argument("--iterations", type=_iterations, default=None, metavar="auto|T")


def _add_sampling_flags(p):
    p.add_argument("--schedule", choices=SCHEDULES, default=CHAINING)
    p.add_argument("--constant", type=_positive_float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--directions", type=int, default=64)
    p.add_argument("--cut-cap", type=int, default=DEFAULT_CUT_CAP)


def build_parser():
    parser = _Parser(prog="hypersparse", description="Spectral hypergraph sparsification.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("sparsify", help="sparsify a .hgr or .mhg hypergraph")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="compacted sparsifier (.mhg)")
    p.add_argument("--tau", help="write overestimates (.tau)")
    p.add_argument("--report", help="write the JSON report")
    p.add_argument("--epsilon", type=_epsilon, default=0.5)
    _add_sampling_flags(p)
    _add_solver_flags(p)
    p.add_argument("--no-certify", dest="certify", action="store_false")
    p.add_argument("--cert-cap", type=int, default=DEFAULT_CERT_CAP)

    p = sub.add_parser("verify", help="certify overestimates and an optional sparsifier")
    p.add_argument("--input", required=True)
    p.add_argument("--tau", required=True)
    p.add_argument("--sparsifier")
    p.add_argument("--epsilon", type=_epsilon, default=None,
                   help="also require the measured errors to be at most epsilon")
    p.add_argument("--report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--directions", type=int, default=64)
    p.add_argument("--cut-cap", type=int, default=DEFAULT_CUT_CAP)

    p = sub.add_parser("bench", help="CSV sweep over epsilon, rank and constant")
    p.add_argument("--kind", choices=KINDS, default="uniform-hypergraph")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--k", type=int, default=200)
    p.add_argument("--epsilons", type=_csv_list(_epsilon), default=[0.5])
    p.add_argument("--ranks", type=_csv_list(int), default=[4])
    p.add_argument("--constants", type=_csv_list(_positive_float), default=[1.0])
    p.add_argument("--seeds", type=_csv_list(int), default=[0])
    p.add_argument("--schedule", choices=SCHEDULES, default=CHAINING)
    p.add_argument("--directions", type=int, default=64)
    p.add_argument("--cut-cap", type=int, default=DEFAULT_CUT_CAP)
    p.add_argument("--output", help="CSV path (default stdout)")
    _add_solver_flags(p)

    p = sub.add_parser("generate", help="write a random .hgr hypergraph")
    p.add_argument("--kind", choices=KINDS, default="uniform-hypergraph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--weight-law", choices=WEIGHT_LAWS, default="constant")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    return parser


def _solver(args):
    return SolverConfig(mode=args.solver, delta=args.delta, sketch_rows=args.sketch_rows,
                        cg_tolerance=args.cg_tolerance, cg_max_iter=args.cg_max_iter,
                        ridge=args.ridge, workers=args.workers)


def _dump_json(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _unit_of(G):
    return unitize(clique_expand(G)) if isinstance(G, GraphicalHypergraph) else unitize(G)


def run_sparsify(args):
    G = read_hypergraph(args.input)
    cfg = SparsifyConfig(schedule=args.schedule, constant=args.constant, seed=args.seed,
                         solver=_solver(args), iterations=args.iterations, certify=args.certify,
                         cert_cap=args.cert_cap, directions=args.directions, cut_cap=args.cut_cap)
    res = sparsify(G, args.epsilon, cfg)
    H = res.sparsifier
    quality = res.quality or measure_quality(res.unit, H, args.epsilon, args.directions, args.cut_cap, args.seed)
    report = res.report or CertReport()
    if args.output:
        atomic_write(args.output, format_mhg(H))
    if args.tau:
        atomic_write(args.tau, format_tau(res.overestimates))
    doc = report.to_json()
    doc["quality"] = quality.to_json()
    doc["plan"] = res.output.plan.to_json()
    doc["sizes"] = res.sizes()
    if args.report:
        atomic_write(args.report, _dump_json(doc))
    for line in report.lines():
        print(line)
    print(f"kept {res.output.kept} of {res.unit.k} groups (expected {res.output.expected_kept:.6g})")
    return EXIT_OK if report.overall else EXIT_VERIFY


def run_verify(args):
    G = read_hypergraph(args.input)
    O = read_tau(args.tau)
    unit = _unit_of(G)
    report = certify_overestimates(unit, O)
    if O.tau.shape == (unit.k,) and O.witness_weights.shape == (unit.m,):
        report.extend(group_contribution_check(unit, O.tau, O.witness_weights, args.directions, args.seed))
    doc = {}
    if args.sparsifier:
        H = read_hypergraph(args.sparsifier)
        if isinstance(H, GraphicalHypergraph):
            H = clique_expand(H)
        q = measure_quality(unit, H, args.epsilon, args.directions, args.cut_cap, args.seed)
        doc["quality"] = q.to_json()
        if args.epsilon is not None:
            worst = max(q.max_rel_err_random, q.max_rel_err_cuts or 0.0)
            report.add("sparsifier_within_epsilon", worst <= args.epsilon, worst,
                       f"largest relative energy error vs epsilon={args.epsilon}")
    doc = {**report.to_json(), **doc}
    if args.report:
        atomic_write(args.report, _dump_json(doc))
    for line in report.lines():
        print(line)
    return EXIT_OK if report.overall else EXIT_VERIFY


def run_bench(args):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_HEADER)
    solver = _solver(args)
    for r in args.ranks:
        for seed in args.seeds:
            G = generate_random(args.kind, args.n, args.k, r, "constant", seed)
            for eps in args.epsilons:
                for c in args.constants:
                    cfg = SparsifyConfig(schedule=args.schedule, constant=c, seed=seed, solver=solver,
                                         iterations=args.iterations)
                    t0 = time.perf_counter()
                    res = sparsify(G, eps, cfg)
                    ms = (time.perf_counter() - t0) * 1e3
                    q = measure_quality(res.unit, res.sparsifier, eps, args.directions, args.cut_cap, seed)
                    cuts = "" if q.max_rel_err_cuts is None else repr(q.max_rel_err_cuts)
                    writer.writerow([eps, r, c, seed, res.unit.n, res.unit.m, res.unit.k, res.output.kept,
                                     repr(res.output.expected_kept), repr(q.max_rel_err_random), cuts,
                                     f"{ms:.1f}"])
    if args.output:
        atomic_write(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def run_generate(args):
    G = generate_random(args.kind, args.n, args.k, args.r, args.weight_law, args.seed)
    write_hgr(args.output, G)
    return EXIT_OK


COMMANDS = {"sparsify": run_sparsify, "verify": run_verify, "bench": run_bench, "generate": run_generate}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (InvalidArgument, OSError) as exc:
        print(f"hypersparse {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"hypersparse {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
