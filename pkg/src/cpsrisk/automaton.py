"""Hybrid automaton, operating envelope and discrete transition semantics.

Discrete events are stream-level switch writes (``outlet:0`` closes the
outlet stream).  Composite valve guards such as ``X2c || C3c`` are kept as
display labels on the events and are never evaluated.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import NoSuchTransition


@dataclass(frozen=True)
class VariableId:
    name: str
    unit: str = ""


@dataclass(frozen=True)
class Mode:
    """A discrete mode: one assignment of open (1) / closed (0) to every switch.

    ``switch_state`` is kept as an ordered tuple of ``(switch, value)`` pairs so
    modes stay hashable.  ``annotation`` is free-form metadata (for example a
    hazard-time label) and is never used in computation.
    """

    id: str
    switch_state: tuple[tuple[str, int], ...]
    flow_ref: str = ""
    annotation: str = ""

    @property
    def switches(self) -> dict[str, int]:
        return dict(self.switch_state)

    def value(self, switch: str) -> int:
        for name, v in self.switch_state:
            if name == switch:
                return v
        raise KeyError(switch)


@dataclass(frozen=True)
class Event:
    switch: str
    target_value: int
    actuator_label: str

    @property
    def key(self) -> tuple[str, int]:
        return (self.switch, self.target_value)

    @property
    def name(self) -> str:
        return f"{self.switch}:{self.target_value}"

    def __str__(self):
        return f"{self.name} [{self.actuator_label}]"


@dataclass(frozen=True)
class Transition:
    source: str
    event: Event
    target: str


@dataclass(frozen=True)
class HybridAutomaton:
    switches: tuple[str, ...]
    variables: tuple[VariableId, ...]
    modes: tuple[Mode, ...]
    events: tuple[Event, ...]
    transitions: tuple[Transition, ...]
    initial_mode: str
    init_state: tuple[float, ...]

    def __post_init__(self):
        for name in ("switches", "variables", "modes", "events", "transitions", "init_state"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if isinstance(self.initial_mode, Mode):
            object.__setattr__(self, "initial_mode", self.initial_mode.id)

    @cached_property
    def _modes_by_id(self) -> dict[str, Mode]:
        return {m.id: m for m in self.modes}

    @cached_property
    def mode_index(self) -> dict[str, int]:
        """Mode id -> declaration index (first occurrence wins)."""
        index: dict[str, int] = {}
        for i, m in enumerate(self.modes):
            index.setdefault(m.id, i)
        return index

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def mode(self, mode: Mode | str) -> Mode:
        key = mode.id if isinstance(mode, Mode) else mode
        try:
            return self._modes_by_id[key]
        except KeyError:
            raise KeyError(f"unknown mode {key!r}") from None

    def event(self, switch: str, value: int) -> Event:
        for e in self.events:
            if e.key == (switch, value):
                return e
        raise KeyError(f"unknown event {switch}:{value}")

    @property
    def initial(self) -> Mode:
        return self.mode(self.initial_mode)


@dataclass(frozen=True)
class Envelope:
    """Per-variable operating bounds.

    A value exactly on a bound is inside; anything strictly beyond it is an
    excursion.
    """

    bounds: tuple[tuple[str, float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple((n, float(lo), float(hi)) for n, lo, hi in self.bounds))

    @classmethod
    def from_mapping(cls, bounds: Mapping[str, tuple[float, float]]) -> Envelope:
        return cls(tuple((name, lo, hi) for name, (lo, hi) in bounds.items()))

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {n: (lo, hi) for n, lo, hi in self.bounds}

    def violated(self, values: Mapping[str, float]) -> list[str]:
        """Names of bounded variables lying outside the envelope."""
        return [n for n, lo, hi in self.bounds if values[n] < lo or values[n] > hi]


@dataclass(frozen=True)
class Issue:
    kind: str
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.severity}: [{self.kind}] {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = field(default_factory=tuple)

    @property
    def is_valid(self) -> bool:
        """No errors; warnings alone do not invalidate a model."""
        return not self.errors

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}

    def __len__(self):
        return len(self.issues)

    def __iter__(self):
        return iter(self.issues)


def _duplicates(names: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dups: list[str] = []
    for n in names:
        if n in seen and n not in dups:
            dups.append(n)
        seen.add(n)
    return dups


def validate_automaton(
    model: HybridAutomaton,
    envelope: Envelope | None = None,
    flows: Iterable[str] | None = None,
) -> ValidationReport:
    """Collect every structural problem of ``model`` without raising.

    ``flows`` is the set of registered flow names; when omitted, flow
    references are not checked.  Unreachable modes are reported as warnings.
    """
    issues: list[Issue] = []
    flow_names = set(flows) if flows is not None else None

    def add(kind, msg, severity="error"):
        issues.append(Issue(kind, msg, severity))

    for kind, names in (
        ("duplicate-switch", model.switches),
        ("duplicate-variable", model.variable_names),
        ("duplicate-mode", [m.id for m in model.modes]),
        ("duplicate-event", [e.name for e in model.events]),
    ):
        for d in _duplicates(names):
            add(kind, f"{d!r} declared more than once")
    for v in model.variables:
        if not v.name:
            add("empty-name", "variable with empty name")

    switch_set = set(model.switches)
    mode_ids = {m.id for m in model.modes}
    for m in model.modes:
        assigned = [s for s, _ in m.switch_state]
        for d in _duplicates(assigned):
            add("switch-state", f"mode {m.id}: switch {d!r} assigned twice")
        missing = [s for s in model.switches if s not in assigned]
        if missing:
            add("switch-state", f"mode {m.id}: no value for {', '.join(missing)}")
        for s, val in m.switch_state:
            if s not in switch_set:
                add("switch-state", f"mode {m.id}: undeclared switch {s!r}")
            if val not in (0, 1):
                add("switch-state", f"mode {m.id}: switch {s!r} has non-binary value {val!r}")
        if flow_names is not None and m.flow_ref not in flow_names:
            add("unresolved-flow", f"mode {m.id}: flow {m.flow_ref!r} is not registered")

    for e in model.events:
        if e.switch not in switch_set:
            add("event", f"event {e.name}: undeclared switch")
        if e.target_value not in (0, 1):
            add("event", f"event {e.name}: non-binary target value")
        if not e.actuator_label.strip():
            add("event", f"event {e.name}: empty actuator label")

    seen_pairs: dict[tuple[str, tuple[str, int]], str] = {}
    event_keys = {e.key for e in model.events}
    for t in model.transitions:
        if t.source not in mode_ids or t.target not in mode_ids:
            add("dangling-transition", f"{t.source} -{t.event.name}-> {t.target}: unknown mode")
            continue
        if t.event.key not in event_keys:
            add("event", f"transition {t.source} -{t.event.name}-> {t.target} uses an undeclared event")
        pair = (t.source, t.event.key)
        if pair in seen_pairs:
            add(
                "nondeterminism",
                f"({t.source}, {t.event.name}) leads to both {seen_pairs[pair]} and {t.target}",
            )
        else:
            seen_pairs[pair] = t.target
        src, dst = model.mode(t.source).switches, model.mode(t.target).switches
        expected = dict(src)
        expected[t.event.switch] = t.event.target_value
        if expected != dst:
            add(
                "switch-arithmetic",
                f"{t.source} -{t.event.name}-> {t.target}: target switch state {dst} != {expected}",
            )

    if model.initial_mode not in mode_ids:
        add("initial-mode", f"initial mode {model.initial_mode!r} is not a declared mode")
    else:
        reach = _reachable(model, model.initial_mode)
        for m in model.modes:
            if m.id not in reach:
                add("unreachable-mode", f"mode {m.id} is unreachable from {model.initial_mode}", "warning")
    if len(model.init_state) != len(model.variables):
        add(
            "init-state",
            f"init_state has {len(model.init_state)} values for {len(model.variables)} variables",
        )

    if envelope is not None:
        declared = set(model.variable_names)
        for name, lo, hi in envelope.bounds:
            if name not in declared:
                add("envelope", f"bound on undeclared variable {name!r}")
            if not lo < hi:
                add("envelope", f"bound on {name!r} has lower {lo} >= upper {hi}")
    return ValidationReport(tuple(issues))


def _reachable(model: HybridAutomaton, start: str) -> set[str]:
    adj: dict[str, list[str]] = {}
    for t in model.transitions:
        adj.setdefault(t.source, []).append(t.target)
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def successors(model: HybridAutomaton, mode: Mode | str) -> list[tuple[Event, Mode]]:
    """Outgoing ``(event, target)`` pairs of ``mode`` in declaration order."""
    src = mode.id if isinstance(mode, Mode) else mode
    return [(t.event, model.mode(t.target)) for t in model.transitions if t.source == src]


def apply_event(model: HybridAutomaton, mode: Mode | str, event: Event | tuple[str, int]) -> Mode:
    src = mode.id if isinstance(mode, Mode) else mode
    key = event.key if isinstance(event, Event) else tuple(event)
    for t in model.transitions:
        if t.source == src and t.event.key == key:
            return model.mode(t.target)
    raise NoSuchTransition(f"no transition from {src} on {key[0]}:{key[1]}")


def product_of_switches(
    switches: Sequence[str],
    variables: Sequence[VariableId],
    init_state: Sequence[float],
    labels: Mapping[tuple[str, int], str] | None = None,
    prefix: str = "S",
    flow_ref: str = "",
    annotations: Mapping[str, str] | None = None,
) -> HybridAutomaton:
    """Build the automaton with one mode per switch vector and every single flip.

    Mode ``{prefix}0`` has every switch open and is the initial mode.  Modes are
    numbered by how many switches are closed, then by
    ``itertools.combinations`` order over ``switches``; transitions from each
    mode flip the switches in declaration order.
    """
    labels = dict(labels or {})
    annotations = dict(annotations or {})
    closed_sets = [c for k in range(len(switches) + 1) for c in itertools.combinations(switches, k)]
    modes = []
    by_state: dict[tuple[int, ...], str] = {}
    for i, closed in enumerate(closed_sets):
        state = tuple((s, 0 if s in closed else 1) for s in switches)
        mid = f"{prefix}{i}"
        modes.append(Mode(mid, state, flow_ref, annotations.get(mid, "")))
        by_state[tuple(v for _, v in state)] = mid

    events = [
        Event(s, v, labels.get((s, v), f"{s}:{v}")) for s in switches for v in (0, 1)
    ]
    ev = {e.key: e for e in events}
    transitions = []
    for m in modes:
        vec = [v for _, v in m.switch_state]
        for j, s in enumerate(switches):
            flipped = list(vec)
            flipped[j] = 1 - vec[j]
            transitions.append(Transition(m.id, ev[(s, flipped[j])], by_state[tuple(flipped)]))
    return HybridAutomaton(
        switches=tuple(switches),
        variables=tuple(variables),
        modes=tuple(modes),
        events=tuple(events),
        transitions=tuple(transitions),
        initial_mode=modes[0].id,
        init_state=tuple(float(x) for x in init_state),
    )

