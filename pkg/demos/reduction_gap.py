"""Watch the 3DM reduction separate YES from NO instances.

A 3DM instance asks for q disjoint triples covering every element. The
reduction turns it into an MBA instance with 0/1 weights whose optimum is 1
when the answer is YES and u + 1 when it is NO, where u is the number of
stacked gadget layers.

Run with ``python demos/reduction_gap.py``.
"""
from collections import Counter

from mba.reduction3dm import (ThreeDmInstance, build_reduction, count_check,
                              solve_3dm_bruteforce, triple_modes, verify_gap)
from mba import solve_exact

yes = ThreeDmInstance(2, ((1, 1, 1), (2, 2, 2), (1, 2, 1)))
no = ThreeDmInstance(2, ((1, 1, 1), (1, 2, 2), (2, 1, 2)))

for name, tdm in (("YES", yes), ("NO", no)):
    answer, witness = solve_3dm_bruteforce(tdm)
    print(f"{name} instance {tdm.triples}: 3DM answer {answer}, witness {witness}")
    for u in (1, 2):
        out = build_reduction(tdm, u)
        counts = count_check(out)
        v = verify_gap(tdm, u, time_limit=120)
        print(f"  u={u}: n={out.instance.n} m={out.instance.m} heights={out.layer_heights} "
              f"counts {'ok' if counts.ok else counts.mismatches}; "
              f"objective {v.objective} (expected {v.expected}, {v.status}, {v.seconds:.2f}s)")

# Inside every gadget, all blocks pick the same triples: the head T node of a
# triple either stays with its own head T node in the next column or not, and
# that choice repeats block after block.
out = build_reduction(yes, 2)
_, sol = solve_exact(out.instance, aggregate_twins=True)
for k, per_block in triple_modes(out, sol).items():
    print(f"layer {k}: triples kept per block {[sorted(s) for s in per_block]}")

kinds = Counter(mt.kind.value for mt in out.meta[out.column(1, 1)])
print("node kinds in the first column of layer 1:", dict(kinds))
