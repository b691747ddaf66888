"""Integrated safety and security risk assessment for cyber-physical systems."""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str = "cstr.model") -> Path:
    """Path of a bundled fixture (``cstr.model``, ``bpcs.atree``, ...)."""
    return Path(str(resources.files(__name__) / "data" / name))


from .attack import (  # noqa: E402
    AttackNode,
    and_,
    basic,
    compose_runaway,
    eval_approx,
    eval_exact,
    minimal_cut_sets,
    or_,
    substitute,
    symbolic,
)
from .automaton import (  # noqa: E402
    Envelope,
    Event,
    HybridAutomaton,
    Mode,
    Transition,
    VariableId,
    apply_event,
    product_of_switches,
    successors,
    validate_automaton,
)
from .dynamics import (  # noqa: E402
    CstrParams,
    HybridSystem,
    PidParams,
    classify_modes,
    hazard_time,
    integrate,
    simulate,
)
from .hazards import ActuatorAction, ActuatorMap, abstract_attack_tree, hazard_tree, traces  # noqa: E402
from .mitigation import MitigationTiming, check_mitigation, mitigation_deadline, recovery_actions  # noqa: E402
from .modelfile import ModelBundle, emit_model, parse_model  # noqa: E402
from .pipeline import AnalysisReport, PipelineOptions, emit_curve, emit_report, run_pipeline  # noqa: E402
from .polynomial import Polynomial  # noqa: E402
from .risk import (  # noqa: E402
    RiskParams,
    check_design,
    design_curve,
    design_point,
    likelihood_bound,
    normalized_cost,
    reduce_to_design_equation,
    risk_score,
    target_risk,
)
