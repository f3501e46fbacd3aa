"""Experiment harness: generate instances, run a method, write CSV records."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .colgen import colgen_solve
from .exact import brute_force, solve_exact
from .greedy import greedy_post, greedy_standard
from .instance import Status, generate_random, objective

log = logging.getLogger(__name__)

CSV_VERSION = "mba-bench-1"
COLUMNS = ["n", "m", "d", "seed", "method", "objective", "greedy_objective",
           "improvement_pct", "status", "runtime_s", "cg_pre_s", "cg_master_s",
           "columns_generated"]
METHODS = ("greedy", "gp1", "gp2", "gp3", "exact", "cg1", "cg2", "cg3", "brute")
HEADER = (f"# {CSV_VERSION}: improvement_pct = 100*(greedy_objective/objective - 1); "
          "the last row (method 'mean:<method>') averages the rows above")


@dataclass
class RunConfig:
    method: str
    n: int
    m: int
    d: float
    seeds: list[int]
    time_limit_seconds: float = 300.0
    out: str | None = None
    max_weight: int = 100
    jobs: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if self.d < 0:
            raise ValueError("d must be nonnegative")
        if self.time_limit_seconds <= 0:
            raise ValueError("time limit must be positive")
        self.seeds = [int(s) for s in self.seeds]

    @property
    def lookahead(self) -> int | None:
        return int(self.method[-1]) if self.method[:2] in ("gp", "cg") else None


@dataclass
class RunRecord:
    n: int
    m: int
    d: float
    seed: int
    method: str
    objective: float | None
    greedy_objective: float | None
    improvement_pct: float | None
    status: str
    runtime_s: float
    cg_pre_s: float | None = None
    cg_master_s: float | None = None
    columns_generated: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL.value


def improvement_pct(greedy_obj, method_obj) -> float | None:
    if greedy_obj is None or method_obj is None or method_obj <= 0:
        return None
    return 100.0 * (greedy_obj / method_obj - 1.0)


def run_method(method: str, inst, time_limit: float, greedy_sol=None) -> dict:
    """Run one method; returns objective, status, solution and timing fields."""
    t0 = time.perf_counter()
    if greedy_sol is None:
        greedy_sol = greedy_standard(inst)
    g_obj = objective(inst, greedy_sol)
    step = time_limit / max(inst.m - 1, 1)
    out = {"cg_pre_s": None, "cg_master_s": None, "columns_generated": None}
    if method == "greedy":
        sol, status = greedy_sol, Status.FEASIBLE.value
    elif method.startswith("gp"):
        sol = greedy_post(inst, int(method[2]), step_time_limit=step)
        if objective(inst, sol) > g_obj:
            sol = greedy_sol
        status = Status.FEASIBLE.value
    elif method == "exact":
        report, sol = solve_exact(inst, time_limit=time_limit, warm_start=greedy_sol)
        status = report.status.value
        out["lower_bound"] = report.lower_bound
    elif method.startswith("cg"):
        L = int(method[2])
        start = greedy_post(inst, L, step_time_limit=step)
        if objective(inst, start) > g_obj:
            start = greedy_sol
        report, sol = colgen_solve(inst, time_limit=time_limit, L=L, start=start,
                                   step_time_limit=step)
        trace = report.extra["trace"]
        status = report.status.value
        out.update(cg_pre_s=trace.pre_seconds, cg_master_s=trace.master_seconds,
                   columns_generated=trace.columns, lower_bound=report.lower_bound)
    elif method == "brute":
        _, sol = brute_force(inst)
        status = Status.OPTIMAL.value
    else:
        raise ValueError(f"unknown method {method!r}")
    out.update(solution=sol, objective=objective(inst, sol), status=status,
               greedy_objective=g_obj, runtime_s=time.perf_counter() - t0)
    return out


def _one(config: RunConfig, seed: int) -> RunRecord:
    inst = generate_random(config.n, config.m, config.d, seed, config.max_weight)
    try:
        res = run_method(config.method, inst, config.time_limit_seconds)
    except Exception as exc:                        # recorded, the run continues
        log.warning("seed %d, %s failed: %s", seed, config.method, exc)
        return RunRecord(config.n, config.m, config.d, seed, config.method, None, None, None,
                         f"Error: {type(exc).__name__}: {exc}", 0.0)
    obj = _plain(res["objective"])
    g = _plain(res["greedy_objective"])
    return RunRecord(config.n, config.m, config.d, seed, config.method, obj, g,
                     improvement_pct(g, obj), res["status"], res["runtime_s"],
                     res["cg_pre_s"], res["cg_master_s"], res["columns_generated"],
                     {"lower_bound": res.get("lower_bound")})


def _plain(x):
    x = x.item() if hasattr(x, "item") else x
    return int(x) if isinstance(x, float) and x.is_integer() else x


def aggregate(records: list[RunRecord]) -> dict:
    """Column means over the successful records."""
    ok = [r for r in records if r.objective is not None]
    row = {c: "" for c in COLUMNS}
    if records:
        row.update(n=records[0].n, m=records[0].m, d=records[0].d)
        row["method"] = f"mean:{records[0].method}"
    for col in ("objective", "greedy_objective", "improvement_pct", "runtime_s",
                "cg_pre_s", "cg_master_s", "columns_generated"):
        vals = [getattr(r, col) for r in ok if getattr(r, col) is not None]
        if vals:
            row[col] = sum(vals) / len(vals)
    row["status"] = f"{sum(r.optimal for r in ok)}/{len(records)} optimal"
    return row


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}" if not math.isinf(v) else "inf"
    return str(v)


def write_csv(records: list[RunRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(HEADER + "\n")
        wr = csv.writer(fh)
        wr.writerow(COLUMNS)
        for r in records:
            d = asdict(r)
            wr.writerow([_fmt(d[c]) for c in COLUMNS])
        agg = aggregate(records)
        wr.writerow([_fmt(agg[c]) for c in COLUMNS])


def read_csv(path) -> tuple[list[dict], dict]:
    """Rows and the aggregate row, as strings keyed by column name."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return rows[:-1], rows[-1]


def run_benchmark(config: RunConfig) -> list[RunRecord]:
    """Run ``config.method`` on every seed; writes the CSV when ``config.out`` is set."""
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_one, [config] * len(config.seeds), config.seeds))
    else:
        records = [_one(config, s) for s in config.seeds]
    records.sort(key=lambda r: (r.seed, r.method))
    if config.out:
        write_csv(records, config.out)
    return records


def load_configs(path) -> list[RunConfig]:
    """JSON: one config object, or ``{"runs": [...]}``. A ``methods`` list expands
    into one config per method; ``seeds`` may be ``{"start": a, "count": k}``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    runs = doc["runs"] if isinstance(doc, dict) and "runs" in doc else [doc]
    out = []
    for run in runs:
        run = dict(run)
        seeds = run.pop("seeds", [0])
        if isinstance(seeds, dict):
            seeds = list(range(seeds.get("start", 0), seeds.get("start", 0) + seeds["count"]))
        methods = run.pop("methods", None) or [run.pop("method")]
        run.pop("method", None)
        for meth in methods:
            out.append(RunConfig(method=meth, seeds=list(seeds), **run))
    return out
