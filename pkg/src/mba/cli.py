"""Command line entry point: ``mba gen | solve | bench | reduce3dm``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import bench
from .instance import (InfeasibleInstanceError, InstanceValidationError, ParseError,
                       generate_random, read_instance, write_instance, write_solution)


def _setup_logging():
    level = os.environ.get("MBA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_gen(args) -> int:
    inst = generate_random(args.n, args.m, args.d, args.seed, args.max_weight)
    write_instance(inst, args.out)
    print(f"wrote {args.out}: n={inst.n} m={inst.m} arcs={sum(len(a) for a in inst.arcs)}")
    return 0


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    method = args.method
    if method in ("gp", "cg"):
        method = f"{method}{args.lookahead}"
    if method not in bench.METHODS:
        raise SystemExit(f"unknown method {args.method!r}")
    res = bench.run_method(method, inst, args.time_limit)
    print(json.dumps({
        "method": method, "objective": bench._plain(res["objective"]),
        "greedy_objective": bench._plain(res["greedy_objective"]),
        "status": res["status"], "runtime_s": round(res["runtime_s"], 4),
        "lower_bound": bench._plain(res.get("lower_bound")),
        "columns_generated": res["columns_generated"],
    }))
    if args.out:
        write_solution(inst, res["solution"], args.out)
    return 0


def cmd_bench(args) -> int:
    configs = bench.load_configs(args.config)
    records = []
    for cfg in configs:
        if args.jobs:
            cfg.jobs = args.jobs
        records += bench.run_benchmark(cfg)
    # several methods: one CSV each, so every file ends with its own mean row
    by_method: dict = {}
    for r in records:
        by_method.setdefault(r.method, []).append(r)
    if len(by_method) == 1:
        bench.write_csv(records, args.out)
    else:
        base, ext = os.path.splitext(args.out)
        for meth, recs in by_method.items():
            bench.write_csv(recs, f"{base}_{meth}{ext or '.csv'}")
    for meth, recs in by_method.items():
        agg = bench.aggregate(recs)
        obj, imp = agg["objective"], agg["improvement_pct"]
        print(f"{meth}: mean objective {bench._fmt(obj) or 'n/a'}, "
              f"mean improvement {bench._fmt(imp) or 'n/a'}%  ({agg['status']})")
    return 0


def cmd_reduce3dm(args) -> int:
    from .reduction3dm import build_reduction, count_check, read_3dm, verify_gap

    tdm = read_3dm(args.tdm)
    out = build_reduction(tdm, args.u)
    report = count_check(out)
    print(f"q={tdm.q} p={tdm.p} u={args.u}: n={out.instance.n} m={out.instance.m} "
          f"heights={out.layer_heights} counts={'ok' if report.ok else 'MISMATCH'}")
    for msg in report.mismatches:
        print("  " + msg)
    if args.out:
        write_instance(out.instance, args.out)
        with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(out.to_json(), fh)
    if args.verify:
        v = verify_gap(tdm, args.u, time_limit=args.time_limit)
        print(f"3DM {'YES' if v.is_yes else 'NO'}; MBA objective {v.objective} "
              f"(expected {v.expected}); {v.status}")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mba", description="Multi-level bottleneck assignment tools")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--d", type=float, required=True, help="arc density factor")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--max-weight", type=int, default=100)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--method", required=True,
                   help="greedy, gp, cg, exact, brute (gp/cg take --lookahead) or gp1..cg3")
    s.add_argument("--instance", required=True)
    s.add_argument("--time-limit", type=float, default=300.0)
    s.add_argument("--lookahead", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark configuration")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--jobs", type=int, default=0, help="parallel instances (default: config)")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("reduce3dm", help="build the MBA instance of a 3DM input")
    r.add_argument("--tdm", required=True)
    r.add_argument("--u", type=int, required=True)
    r.add_argument("--verify", action="store_true")
    r.add_argument("--time-limit", type=float, default=None)
    r.add_argument("--out", help="write the instance here and node metadata to OUT.meta.json")
    r.set_defaults(func=cmd_reduce3dm)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InstanceValidationError, InfeasibleInstanceError, ValueError,
            OSError) as exc:
        print(f"mba: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
