"""How long does an operator have to undo a coolant valve attack?

The hazard development time of each hazardous mode bounds the mitigation
window.  Subtracting detection time (and adding any tolerable excursion)
gives the deadline; the recovery transitions list the valve moves that lead
back to a safe mode.
"""

import cpsrisk
from cpsrisk.dynamics import classify_modes, hazardous_modes
from cpsrisk.mitigation import MitigationTiming, check_mitigation, recovery_actions

bundle = cpsrisk.parse_model(cpsrisk.data_path())
verdicts = classify_modes(bundle.system(), bundle.envelope, 120.0, 0.01)
hazards = hazardous_modes(verdicts)
safe = [m.id for m in bundle.automaton.modes if m.id not in hazards]

for h in hazards:
    tau = verdicts[h].crossing_time
    v = check_mitigation(MitigationTiming(tau, excursion_time=0.0, detection_time=2.0, mitigation_time=3.0))
    moves = ", ".join(f"{e.actuator_label} -> {m.id}" for e, m in recovery_actions(bundle.automaton, h, safe))
    state = "in time" if v.feasible else "too late"
    print(f"{h}: hazard in {tau:.2f} min, deadline {v.deadline:.2f} min, 3 min fix is {state}; recover via {moves}")
