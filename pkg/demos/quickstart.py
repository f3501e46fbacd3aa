"""Quickstart: build a tiny instance by hand, then solve a generated one.

Run with ``python demos/quickstart.py``.
"""
from mba import (MbaInstance, brute_force, generate_random, greedy_post, greedy_standard,
                 objective, solve_exact)

# Two layers of two nodes, every arc allowed. Pairing node 0 with node 1 and
# node 1 with node 0 gives tuple weights 3+2 and 1+4, so the best bottleneck is 5.
tiny = MbaInstance([[3, 4], [1, 2]], [[(0, 0), (0, 1), (1, 0), (1, 1)]])
value, sol = brute_force(tiny)
print("hand-made instance, optimum", value, "tuples", sol.assign)

# A generated instance: weights in 1..100, horizontal arcs plus floor(d*n) random walks.
inst = generate_random(n=10, m=5, d=1.8, seed=42)
g = greedy_standard(inst)
gp = greedy_post(inst, 2)
report, best = solve_exact(inst, time_limit=60, warm_start=gp)

print(f"greedy          {objective(inst, g)}")
print(f"greedy + post   {objective(inst, gp)}")
print(f"exact           {report.objective} ({report.status.value}, "
      f"{report.node_or_iteration_count} nodes, {report.runtime_seconds:.2f}s)")
for row in best.assign:
    print("  tuple", row, "weight", sum(inst.weights[i, j] for j, i in enumerate(row)))
