"""Hazard execution trees, traces and the abstract cyber attack tree.

The hazard tree merges one shortest path from the root mode to every
hazardous mode.  Paths come from a breadth-first search with unit edge
weights.  When several predecessors sit at the same distance, a
non-hazardous one is preferred, then the one declared first; because the
choice depends only on the node, the merged paths always form a tree.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .attack import AttackNode, and_, basic, or_
from .automaton import Event, HybridAutomaton, Mode
from .errors import UnmappedActuator, UnreachableHazard

SYSTEM_CODES = {"BPCS": "B", "SIS": "S"}
ACTION_CODES = {"Open": "O", "Close": "C"}


@dataclass(frozen=True)
class TreeEdge:
    parent: str
    event: Event
    child: str


@dataclass(frozen=True)
class HazardTree:
    root: str
    nodes: tuple[str, ...]
    edges: tuple[TreeEdge, ...]
    adjacency: np.ndarray
    hazard_leaves: tuple[str, ...]
    mode_order: tuple[str, ...]

    def parent(self, mode: str) -> TreeEdge | None:
        for e in self.edges:
            if e.child == mode:
                return e
        return None

    def children(self, mode: str) -> list[str]:
        return [e.child for e in self.edges if e.parent == mode]

    def path(self, mode: str) -> list[TreeEdge]:
        """Edges from the root down to ``mode``."""
        out = []
        edge = self.parent(mode)
        while edge is not None:
            out.append(edge)
            edge = self.parent(edge.parent)
        return out[::-1]

    def depth(self, mode: str) -> int:
        return len(self.path(mode))


def bfs_distances(model: HybridAutomaton, root: str) -> dict[str, int]:
    dist = {root: 0}
    queue = deque([root])
    adj: dict[str, list[str]] = {}
    for t in model.transitions:
        adj.setdefault(t.source, []).append(t.target)
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def hazard_tree(model: HybridAutomaton, root: Mode | str, hazardous: Iterable[Mode | str]) -> HazardTree:
    root = root.id if isinstance(root, Mode) else root
    model.mode(root)
    order = model.mode_index
    hazard_set = {h.id if isinstance(h, Mode) else h for h in hazardous}
    for h in hazard_set:
        model.mode(h)
    dist = bfs_distances(model, root)
    missing = sorted((h for h in hazard_set if h not in dist), key=order.get)
    if missing:
        raise UnreachableHazard(missing)

    def choose_parent(v: str) -> TreeEdge:
        best = None
        for t in model.transitions:
            if t.target != v or dist.get(t.source) != dist[v] - 1:
                continue
            key = (t.source in hazard_set, order[t.source])
            if best is None or key < best[0]:
                best = (key, TreeEdge(t.source, t.event, v))
        return best[1]

    edges: dict[str, TreeEdge] = {}
    for h in sorted(hazard_set, key=order.get):
        v = h
        while v != root and v not in edges:
            e = choose_parent(v)
            edges[v] = e
            v = e.parent

    tree_nodes = {root} | set(edges)
    node_list = tuple(sorted(tree_nodes, key=order.get))
    edge_list = tuple(sorted(edges.values(), key=lambda e: (dist[e.child], order[e.child])))
    mode_order = tuple(m.id for m in model.modes)
    M = np.zeros((len(mode_order), len(mode_order)), dtype=int)
    for e in edge_list:
        M[order[e.parent], order[e.child]] = 1
    leaves = tuple(m for m in node_list if m in hazard_set)
    return HazardTree(root, node_list, edge_list, M, leaves, mode_order)


def _label(event: Event) -> str:
    return re.sub(r"\s+", "", event.actuator_label)


@dataclass(frozen=True)
class Trace:
    root: str
    steps: tuple[tuple[Event, str], ...]

    @property
    def target(self) -> str:
        return self.steps[-1][1] if self.steps else self.root

    def render(self) -> str:
        """``s0 −C2c→ s2`` style text; mode ids lower-cased, labels unspaced."""
        out = self.root.lower()
        for event, mode in self.steps:
            out += f" −{_label(event)}→ {mode.lower()}"
        return out

    def __str__(self):
        return self.render()


def traces(tree: HazardTree) -> list[Trace]:
    """One root-to-hazard trace per hazardous node of the tree."""
    out = []
    for h in tree.hazard_leaves:
        path = tree.path(h)
        if not path:
            continue
        out.append(Trace(tree.root, tuple((e.event, e.child) for e in path)))
    return out


@dataclass(frozen=True)
class ActuatorAction:
    system: str
    device: str
    action: str

    def __post_init__(self):
        if self.system not in SYSTEM_CODES:
            raise ValueError(f"system must be one of {sorted(SYSTEM_CODES)}, got {self.system!r}")
        if self.action not in ACTION_CODES:
            raise ValueError(f"action must be Open or Close, got {self.action!r}")

    @property
    def name(self) -> str:
        """``<System>(<Device>_<Action>)``, e.g. ``B(C2_C)``."""
        return f"{SYSTEM_CODES[self.system]}({self.device}_{ACTION_CODES[self.action]})"

    @property
    def description(self) -> str:
        return f"{self.action.lower()} {self.device} via {self.system}"


class ActuatorMap:
    """Maps an atomic actuator label (``C2c``) to the cyber action behind it."""

    def __init__(self, entries: Mapping[str, ActuatorAction | tuple[str, str, str]]):
        self.entries: dict[str, ActuatorAction] = {}
        owner: dict[str, str] = {}
        for label, act in entries.items():
            if not isinstance(act, ActuatorAction):
                act = ActuatorAction(*act)
            prev = owner.setdefault(act.device, act.system)
            if prev != act.system:
                raise ValueError(f"device {act.device!r} listed under both {prev} and {act.system}")
            self.entries[label.strip()] = act

    def __eq__(self, other):
        return isinstance(other, ActuatorMap) and self.entries == other.entries

    def __contains__(self, label):
        return label in self.entries

    def resolve(self, label: str) -> list[list[ActuatorAction]]:
        """Disjunctive normal form of a guard label.

        ``X2c || C3c`` -> ``[[S(X2_C)], [B(C3_C)]]``; ``X1o & C1o`` -> one
        conjunction of two actions.
        """
        label = label.strip()
        if label in self.entries:
            return [[self.entries[label]]]
        dnf = []
        for alt in label.split("||"):
            conj = []
            for atom in alt.split("&"):
                atom = atom.strip()
                if atom not in self.entries:
                    raise UnmappedActuator(atom if atom else label)
                conj.append(self.entries[atom])
            dnf.append(conj)
        return dnf

    def unresolved(self, model: HybridAutomaton) -> list[str]:
        bad = []
        for e in model.events:
            try:
                self.resolve(e.actuator_label)
            except UnmappedActuator:
                bad.append(e.actuator_label)
        return bad


def abstract_attack_tree(tree: HazardTree, amap: ActuatorMap) -> AttackNode:
    """OR over hazard traces; multi-step traces become AND of per-step actions.

    Leaf ids are ``t<i>.s<j>.<action>`` (1-based trace and step), so every
    leaf maps back to exactly one trace step; the leaf variable is the action
    name, shared wherever the same cyber action recurs.
    """
    trace_nodes = []
    for i, tr in enumerate(traces(tree), start=1):
        steps = []
        for j, (event, _) in enumerate(tr.steps, start=1):
            prefix = f"t{i}.s{j}"
            dnf = amap.resolve(event.actuator_label)
            alts = []
            for k, conj in enumerate(dnf, start=1):
                suffix = f"{prefix}.a{k}" if len(dnf) > 1 and len(conj) > 1 else prefix
                leaves_ = [basic(a.name, f"{suffix}.{a.name}", a.description) for a in conj]
                alts.append(leaves_[0] if len(leaves_) == 1 else and_(*leaves_, id=suffix + ".and"))
            step = alts[0] if len(alts) == 1 else or_(*alts, id=prefix, description=_label(event))
            steps.append(step)
        if len(steps) == 1:
            trace_nodes.append(steps[0])
        else:
            trace_nodes.append(and_(*steps, id=f"t{i}", description=tr.render()))
    return or_(*trace_nodes, id="hazard", description=f"process hazard reached from {tree.root}")
