"""Find which reactor modes are hazardous and how an attacker reaches them.

Every mode of the valve automaton is simulated from the nominal operating
point; modes whose temperature leaves the envelope are hazardous.  The
shortest event paths to those modes form the hazard tree, and mapping each
event to the cyber action behind it yields the abstract attack tree.
"""

import cpsrisk
from cpsrisk.attack import minimal_cut_sets
from cpsrisk.dynamics import classify_modes, hazardous_modes
from cpsrisk.hazards import abstract_attack_tree, hazard_tree, traces

bundle = cpsrisk.parse_model(cpsrisk.data_path())
aut = bundle.automaton
verdicts = classify_modes(bundle.system(), bundle.envelope, 120.0, 0.01)

print("mode  closed valves          verdict")
for m in aut.modes:
    closed = ", ".join(s for s in aut.switches if m.value(s) == 0) or "-"
    v = verdicts[m.id]
    status = f"{v.violated_variable} leaves envelope at {v.crossing_time:.2f} min" if v.hazardous else "safe"
    print(f"{m.id:<5} {closed:<22} {status}")

hazards = hazardous_modes(verdicts)
tree = hazard_tree(aut, "S0", hazards)
print("\nhazard traces:")
for tr in traces(tree):
    print("  " + tr.render())

att = abstract_attack_tree(tree, bundle.actuator_map)
cuts = [sorted(c) for c in minimal_cut_sets(att)]
print("\nminimal cyber actions that cause a hazard:", cuts)
