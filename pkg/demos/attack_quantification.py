"""Quantify the runaway-reaction attack trees two ways.

The rare-event form adds OR branches and is a cheap upper bound; the exact
form treats leaves as independent events.  Scaling every leaf probability
down shows the two converge, which is what justifies the cheap form for
design work.
"""

import cpsrisk
from cpsrisk.attack import eval_approx, eval_exact, minimal_cut_sets, symbolic
from cpsrisk.risk import reduce_to_design_equation

bundle = cpsrisk.parse_model(cpsrisk.data_path())
a = bundle.assignment

for name, tree in bundle.attack_trees.items():
    poly = symbolic(tree, "approx")
    reduced = reduce_to_design_equation(poly, bundle.substitutions[name])
    print(f"{name}")
    print(f"  polynomial  {poly}")
    print(f"  reduced     {reduced}")
    print(f"  cut sets    {len(minimal_cut_sets(tree))}")
    print(f"  approx {eval_approx(tree, a):.5f}  exact {eval_exact(tree, a):.5f}")

tree = bundle.attack_trees["bpcs"]
print("\nbpcs gap as leaves get rarer:")
for k in range(4):
    s = {v: p * 10.0**-k for v, p in a.items()}
    gap = eval_approx(tree, s) - eval_exact(tree, s)
    print(f"  scale 1e-{k}: gap {gap:.3e}")
