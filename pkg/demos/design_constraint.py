"""Turn consequence costs into a security requirement.

The weighted consequence cost fixes a tolerable risk, and from it a bound on
attack likelihood.  Under the equal-probability assumptions the runaway
likelihood collapses to a single monomial, so the bound becomes a
constraint between the corporate network compromise probability and the
control system compromise probability.
"""

import cpsrisk
from cpsrisk.pipeline import curve_csv
from cpsrisk.risk import design_curve, design_point, likelihood_bound, normalized_cost, target_risk

bundle = cpsrisk.parse_model(cpsrisk.data_path())
q = normalized_cost(bundle.risk)
r = target_risk(q, bundle.risk.zeta)
print(f"normalized cost q = {q}")
print(f"tolerable risk  r = {r:.3e}")
print(f"likelihood bound  = {likelihood_bound(q, bundle.risk.zeta):.3e}")

bound = 1e-5
for p_cps, p_c in [(1e-4, 1e-2), (1e-2, 1e-2), (1e-3, 1e-3)]:
    pt = design_point(p_cps, p_c, bound)
    verdict = "feasible" if pt.feasible else "infeasible"
    print(f"P_CPS={p_cps:g} P_c={p_c:g}: {verdict} (margin {pt.margin:+.2f} decades)")

print("\nboundary of the feasible region:")
print(curve_csv(design_curve(bound, (1e-5, 1.0), 6)), end="")
