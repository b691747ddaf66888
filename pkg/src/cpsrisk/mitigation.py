"""Mitigation timing and recovery transitions out of hazardous modes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .automaton import Event, HybridAutomaton, Mode, successors


@dataclass(frozen=True)
class MitigationTiming:
    """Times in minutes.

    hazard_time: process hazard development time.
    excursion_time: tolerable time outside the envelope without damage.
    detection_time: time to detect the hazard.
    mitigation_time: time to implement the mitigation.
    """

    hazard_time: float
    excursion_time: float = 0.0
    detection_time: float = 0.0
    mitigation_time: float = 0.0

    def __post_init__(self):
        for name, v in self.__dict__.items():
            if v < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class MitigationVerdict:
    feasible: bool
    deadline: float
    slack: float


def mitigation_deadline(hazard_time: float, excursion_time: float = 0.0, detection_time: float = 0.0) -> float:
    """Latest mitigation time; ``<= 0`` means only a non-cyber safeguard can act."""
    for v in (hazard_time, excursion_time, detection_time):
        if v < 0:
            raise ValueError("times must be >= 0")
    return hazard_time + excursion_time - detection_time


def check_mitigation(t: MitigationTiming) -> MitigationVerdict:
    deadline = mitigation_deadline(t.hazard_time, t.excursion_time, t.detection_time)
    slack = deadline - t.mitigation_time
    return MitigationVerdict(t.mitigation_time < deadline, deadline, slack)


def recovery_actions(
    model: HybridAutomaton, hazardous_mode: Mode | str, safe_modes: Iterable[Mode | str]
) -> list[tuple[Event, Mode]]:
    safe = {m.id if isinstance(m, Mode) else m for m in safe_modes}
    return [(e, m) for e, m in successors(model, hazardous_mode) if m.id in safe]
