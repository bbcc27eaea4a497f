"""Command-line interface.

Subcommands: ``factor`` (generate + factor + report), ``solve`` (file-based
system solve with refinement), ``simulate`` (logical-processor counters
next to the closed-form model), ``commmodel`` (closed forms only) and
``selftest`` (golden-value suite).  The environment variable
``PIVOTKIT_SEED`` overrides any ``--seed`` argument.  Exit codes: 0 on
success, 1 on usage errors, 2 when a selftest check fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bench, comm_model, mmio, parsim
from .core import PivotParams


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _seed(args) -> int:
    env = os.environ.get("PIVOTKIT_SEED")
    if env is not None:
        return int(env)
    return args.seed


def _params(args) -> PivotParams:
    return PivotParams(u=args.u, small=args.small)


def _add_common(sp):
    sp.add_argument("--u", type=float, default=0.01, help="threshold parameter")
    sp.add_argument("--small", type=float, default=1e-20, help="drop tolerance")
    sp.add_argument("--seed", type=int, default=0)


def _write_report(doc: dict, out: str) -> None:
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2)
    table = bench.comparison_table(doc)
    csv_path = os.path.splitext(out)[0] + ".csv"
    with open(csv_path, "w", newline="") as fh:
        csv.writer(fh).writerows(table)
    print(f"wrote {out} and {csv_path}")


def cmd_factor(args) -> int:
    seed = _seed(args)
    params = _params(args)
    methods = args.method.split(",") if args.method != "all" else list(bench.METHODS)
    specs = [bench.GeneratorSpec(args.kind, args.n, args.p, seed=seed + i,
                                 u=args.u) for i in range(args.repeat)]

    def run_one(spec):
        prob = bench.generate(spec)
        full = prob.full
        if full is None:
            # supernode-only kinds: factor the supernode and synthesize the
            # report from the partial factorization
            reports = []
            for method in methods:
                res = bench.factor_supernode(prob.supernode, method, params)
                fact = res.factorization
                trace = bench._growth_trace(res)
                mu0 = trace.mu[0] if trace.mu.size else 0.0
                reports.append(bench.SolveReport(
                    method=method, n=spec.n, p=spec.p, u=params.u,
                    nelim_supernode=sum(b.size for b in fact.pivots
                                        if b.kind != "zero"),
                    nelim_root=0,
                    zero_pivots=sum(b.size for b in fact.pivots
                                    if b.kind == "zero"),
                    delayed=len(fact.delayed),
                    growth_ratio=float(trace.max_mu() / mu0) if mu0 > 0 else 0.0,
                    max_abs_l=fact.max_abs_l(),
                    bwd_err=[0.0], converged=True, singular=False,
                    kind=spec.kind, seed=spec.seed))
            return reports
        rng = np.random.default_rng(spec.seed + 777)
        b = rng.uniform(-1.0, 1.0, spec.n)
        reports = []
        for method in methods:
            rep, _ = bench.solve_with_refinement(
                full, b, method, params, p=spec.p, max_steps=args.refine,
                equilibrate=args.equilibrate, kind=spec.kind, seed=spec.seed)
            reports.append(rep)
        return reports

    all_reports: list[bench.SolveReport] = []
    if args.jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as ex:
            for chunk in ex.map(run_one, specs):
                all_reports.extend(chunk)
    else:
        for spec in specs:
            all_reports.extend(run_one(spec))

    doc = bench.report(all_reports)
    if args.out:
        _write_report(doc, args.out)
    else:
        json.dump(doc, sys.stdout, indent=2)
        print()
    return 0


def cmd_solve(args) -> int:
    seed = _seed(args)
    a = mmio.read_symmetric(args.matrix)
    n = a.shape[0]
    if args.rhs:
        b = mmio.read_dense_vector(args.rhs)
    else:
        b = np.random.default_rng(seed).uniform(-1.0, 1.0, n)
    p = args.p if args.p is not None else min(32, n)
    rep, x = bench.solve_with_refinement(
        a, b, args.method, _params(args), p=p, max_steps=args.refine,
        equilibrate=args.equilibrate, seed=seed)
    doc = bench.report([rep])
    if args.out:
        _write_report(doc, args.out)
    if args.solution:
        mmio.write_dense_vector(x, args.solution)
    print(f"method={rep.method} n={rep.n} p={rep.p} delayed={rep.delayed} "
          f"zero_pivots={rep.zero_pivots} refinements={len(rep.bwd_err) - 1}")
    print("bwd_err: " + " ".join(f"{e:.3e}" for e in rep.bwd_err))
    print("converged" if rep.converged else "NOT converged")
    return 0


def cmd_simulate(args) -> int:
    seed = _seed(args)
    params = _params(args)
    spec = bench.GeneratorSpec(args.kind, args.n, args.p, seed=seed, u=args.u)
    prob = bench.generate(spec)
    res = parsim.simulate(args.method, prob.supernode, args.P, params)
    got = res.counters.as_tuple()
    print(f"method={args.method} n={args.n} p={args.p} P={args.P} kind={args.kind}")
    print(f"{'':12s}{'ops':>16s}{'msgs':>10s}{'bw':>14s}")
    print(f"{'measured':12s}{got[0]:>16d}{got[1]:>10d}{got[2]:>14d}")
    try:
        want = comm_model.scheme_costs(args.method, args.n, args.p, args.P).as_ints()
        print(f"{'model':12s}{want[0]:>16d}{want[1]:>10d}{want[2]:>14d}")
        print("match" if got == want else
              "differ (model assumes every pivot is an immediately accepted 2x2)")
    except ValueError as exc:
        print(f"model n/a: {exc}")
    return 0


def cmd_commmodel(args) -> int:
    c = comm_model.scheme_costs(args.scheme, args.n, args.p, args.P)
    print(f"scheme={args.scheme} n={args.n} p={args.p} P={args.P}")
    print(f"ops  = {c.ops}")
    print(f"msgs = {c.msgs}")
    print(f"bw   = {c.bw}")
    for k, v in comm_model.asymptotics(args.scheme).items():
        print(f"{k}_class = {v}   (P = O(n))")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    failures = run_selftest(verbose=True)
    return 2 if failures else 0


def main(argv=None) -> int:
    parser = _Parser(prog="pivotkit",
                     description="supernode pivoting strategies, cost model "
                                 "and parallel simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("factor", parents=[], help="generate and factor matrices")
    f.add_argument("--method", default="all",
                   help="tpp|strict|relaxed|restricted, comma list, or 'all'")
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--p", type=int, required=True)
    f.add_argument("--kind", choices=bench.KINDS, default="random-indefinite")
    f.add_argument("--repeat", type=int, default=1, help="number of seeded instances")
    f.add_argument("--jobs", type=int, default=1, help="parallel workers over instances")
    f.add_argument("--refine", type=int, default=10, choices=range(0, 11),
                   metavar="{0..10}")
    f.add_argument("--equilibrate", action="store_true")
    f.add_argument("--out", default=None, help="report JSON path (CSV written beside)")
    _add_common(f)
    f.set_defaults(func=cmd_factor)

    s = sub.add_parser("solve", help="solve a Matrix Market system with refinement")
    s.add_argument("--matrix", required=True, help="coordinate symmetric .mtx file")
    s.add_argument("--rhs", default=None, help="dense array rhs file (random if omitted)")
    s.add_argument("--method", choices=bench.METHODS, required=True)
    s.add_argument("--p", type=int, default=None, help="supernode width (default min(32, n))")
    s.add_argument("--refine", type=int, default=10, choices=range(0, 11),
                   metavar="{0..10}")
    s.add_argument("--equilibrate", action="store_true")
    s.add_argument("--out", default=None, help="report JSON path")
    s.add_argument("--solution", default=None, help="write solution vector here")
    _add_common(s)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="logical-processor counters vs the model")
    m.add_argument("--method", choices=parsim.METHODS, required=True)
    m.add_argument("--P", type=int, required=True, help="processor count (power of two)")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--p", type=int, required=True)
    m.add_argument("--kind", choices=bench.KINDS, default="all-2x2-accept")
    _add_common(m)
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("commmodel", help="closed-form scheme costs")
    c.add_argument("--scheme", choices=comm_model.SCHEMES, required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--p", type=int, required=True)
    c.add_argument("--P", type=int, required=True)
    c.set_defaults(func=cmd_commmodel)

    t = sub.add_parser("selftest", help="golden-value suite from the figures")
    t.set_defaults(func=cmd_selftest)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"pivotkit: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
