"""Compare the heuristics on a handful of mid-sized instances.

Greedy commits one layer at a time. Lookahead (GP-L) solves the next L+1
layers exactly before committing, then post-optimization re-matches single
layer cuts. Column generation (CG-L) prices new tuples with the same
heuristic on dual-adjusted weights and finally picks the best partition
from the pool.

Run with ``python demos/compare_methods.py [n] [m] [seeds]``.
"""
import sys
import time

from mba import colgen_solve, generate_random, greedy_post, greedy_standard, objective

n = int(sys.argv[1]) if len(sys.argv) > 1 else 20
m = int(sys.argv[2]) if len(sys.argv) > 2 else 6
seeds = int(sys.argv[3]) if len(sys.argv) > 3 else 5
STEP_NODES = 2000

print(f"n={n} m={m} d=2.2, {seeds} seeds; improvement = 100*(greedy/method - 1)")
print(f"{'seed':>4} {'greedy':>7} {'GP1':>6} {'GP2':>6} {'CG2':>6} {'LP bound':>9} {'CG s':>6}")
totals = {"GP1": 0.0, "GP2": 0.0, "CG2": 0.0}
for seed in range(seeds):
    inst = generate_random(n, m, 2.2, seed)
    g = objective(inst, greedy_standard(inst))
    gp1 = objective(inst, greedy_post(inst, 1, step_node_limit=STEP_NODES))
    gp2_sol = greedy_post(inst, 2, step_node_limit=STEP_NODES)
    gp2 = objective(inst, gp2_sol)
    t0 = time.perf_counter()
    report, _ = colgen_solve(inst, time_limit=120, L=2, start=gp2_sol, step_node_limit=STEP_NODES)
    secs = time.perf_counter() - t0
    for name, val in (("GP1", gp1), ("GP2", gp2), ("CG2", report.objective)):
        totals[name] += 100.0 * (g / val - 1.0)
    print(f"{seed:>4} {g:>7} {gp1:>6} {gp2:>6} {report.objective:>6} "
          f"{report.lower_bound:>9.1f} {secs:>6.1f}")

print("mean improvement: " + ", ".join(f"{k} {v / seeds:.2f}%" for k, v in totals.items()))
