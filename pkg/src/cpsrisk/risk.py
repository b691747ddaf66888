"""Continuous risk scoring and the CPS security design constraint.

Normalized consequence cost ``q`` combines safety, financial and
environmental loss; the tolerable risk is ``r = 10**(-zeta q)`` and, with
``R = q L``, the likelihood bound is ``L <= 10**-(zeta q + log10 q)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import AssumptionConflict, InvalidWeights, LossExceedsMax, UnassignedVariable
from .polynomial import Polynomial

WEIGHT_TOL = 1e-12

# Equal-probability and policy assumptions that reduce the runaway likelihood
# to a single design monomial.
DESIGN_ASSUMPTIONS: tuple[tuple[str, int | str], ...] = (
    ("c7", "c5"),
    ("c14", "c13"),
    ("c18", "c13"),
    ("c8", 0),
    ("c17", 1),
    ("c21", 0),
)


class DegenerateCostWarning(UserWarning):
    """Zero consequence cost: every likelihood is tolerable."""


@dataclass(frozen=True)
class RiskParams:
    alpha: float
    beta: float
    gamma: float
    safety_loss: float
    safety_max: float
    financial_loss: float
    financial_max: float
    environmental_loss: float
    environmental_max: float
    zeta: float

    def __post_init__(self):
        weights = (self.alpha, self.beta, self.gamma)
        if any(w < 0 for w in weights) or abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
            raise InvalidWeights(f"weights {weights} must be non-negative and sum to 1")
        for loss, cap, label in (
            (self.safety_loss, self.safety_max, "safety"),
            (self.financial_loss, self.financial_max, "financial"),
            (self.environmental_loss, self.environmental_max, "environmental"),
        ):
            if not cap > 0:
                raise LossExceedsMax(f"{label} maximum must be > 0")
            if not 0 <= loss <= cap:
                raise LossExceedsMax(f"{label} loss {loss} outside [0, {cap}]")
        if not self.zeta > 0:
            raise ValueError("zeta must be > 0")


def normalized_cost(p: RiskParams) -> float:
    return math.fsum(
        (
            p.alpha * (p.safety_loss / p.safety_max),
            p.beta * (p.financial_loss / p.financial_max),
            p.gamma * (p.environmental_loss / p.environmental_max),
        )
    )


def target_risk(q: float, zeta: float) -> float:
    if not zeta > 0:
        raise ValueError("zeta must be > 0")
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    if q == 0:
        warnings.warn("normalized cost is 0; target risk set to 1", DegenerateCostWarning, stacklevel=2)
        return 1.0
    return 10.0 ** (-zeta * q)


def risk_score(likelihood: float, q: float) -> float:
    if likelihood < 0:
        raise ValueError("likelihood must be >= 0")
    return q * likelihood


def likelihood_bound(q: float, zeta: float) -> float:
    """Largest likelihood with ``q * L <= target_risk(q, zeta)``."""
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    if not zeta > 0:
        raise ValueError("zeta must be > 0")
    return 10.0 ** (-(zeta * q + math.log10(q)))


@dataclass(frozen=True)
class DesignVerdict:
    likelihood: float
    bound: float
    feasible: bool
    margin: float  # log10(bound) - log10(likelihood)


@dataclass(frozen=True)
class DesignPoint:
    p_cps: float
    p_c: float
    feasible: bool
    margin: float


def design_verdict(likelihood: float, bound: float) -> DesignVerdict:
    if not 0 < bound <= 1:
        raise ValueError("bound must lie in (0, 1]")
    margin = math.inf if likelihood <= 0 else math.log10(bound) - math.log10(likelihood)
    return DesignVerdict(likelihood, bound, likelihood <= bound, margin)


def check_design(likelihood_poly: Polynomial, a: Mapping[str, float], bound: float) -> DesignVerdict:
    """Evaluate the likelihood polynomial (rare-event form) against ``bound``."""
    missing = likelihood_poly.variables() - set(a)
    if missing:
        raise UnassignedVariable(missing)
    return design_verdict(likelihood_poly.evaluate(a), bound)


def design_point(p_cps: float, p_c: float, bound: float) -> DesignPoint:
    """Feasibility of a point of the reduced constraint ``P_CPS * P_c <= bound``."""
    for name, p in (("p_cps", p_cps), ("p_c", p_c)):
        if not 0 < p <= 1:
            raise ValueError(f"{name} must lie in (0, 1]")
    v = check_design(Polynomial.parse("P_CPS*P_c"), {"P_CPS": p_cps, "P_c": p_c}, bound)
    return DesignPoint(p_cps, p_c, v.feasible, v.margin)


def design_curve(bound: float, p_c_range: tuple[float, float], n_points: int) -> list[tuple[float, float]]:
    """Boundary ``P_CPS * P_c = bound`` as ``(log10 P_CPS, log10 P_c)`` pairs.

    ``P_c`` is sampled evenly in log10 across ``p_c_range``; designs below the
    curve are feasible.
    """
    lo, hi = p_c_range
    if not 0 < lo < hi <= 1:
        raise ValueError("need 0 < lo < hi <= 1")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not 0 < bound <= 1:
        raise ValueError("bound must lie in (0, 1]")
    log_bound = math.log10(bound)
    log_pc = np.linspace(math.log10(lo), math.log10(hi), n_points)
    return [(log_bound - float(x), float(x)) for x in log_pc]


def _assumption_bindings(assumptions: Iterable[tuple[str, int | str]] | Mapping[str, int | str]) -> dict:
    pairs = list(assumptions.items()) if isinstance(assumptions, Mapping) else list(assumptions)
    fixed: dict[str, int] = {}
    alias: dict[str, str] = {}
    for var, value in pairs:
        if isinstance(value, str):
            if var in alias and alias[var] != value:
                raise AssumptionConflict(f"{var} aliased to both {alias[var]} and {value}")
            alias[var] = value
        else:
            if value not in (0, 1):
                raise AssumptionConflict(f"{var} fixed to {value}; only 0 or 1 allowed")
            if var in fixed and fixed[var] != value:
                raise AssumptionConflict(f"{var} fixed to both {fixed[var]} and {value}")
            fixed[var] = value
    aliased_names = set(alias) | set(alias.values())
    both = sorted(aliased_names & set(fixed))
    if both:
        raise AssumptionConflict(f"variables both aliased and fixed: {', '.join(both)}")
    chained = sorted(set(alias) & set(alias.values()))
    if chained:
        raise AssumptionConflict(f"alias chains through {', '.join(chained)}")
    return {**fixed, **alias}


def reduce_to_design_equation(
    runaway: Polynomial,
    assumptions: Iterable[tuple[str, int | str]] | Mapping[str, int | str] = DESIGN_ASSUMPTIONS,
) -> Polynomial:
    """Apply an assumption set (fixings and aliases) to the likelihood polynomial."""
    return runaway.substitute(_assumption_bindings(assumptions))


def format_sci(x: float) -> str:
    """Scientific notation, 4 significant digits."""
    return f"{x:.3e}"
