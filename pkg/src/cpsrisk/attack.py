"""AND/OR attack trees: numeric evaluation, symbolic expansion, cut sets.

Two semantics are supported.  ``approx`` is the rare-event approximation
(OR sums, AND multiplies) and is what the design equations use; it can exceed
one.  ``exact`` treats basic events as independent and is exact even when a
variable occurs under several gates.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .errors import TreeTooLarge, UnassignedVariable
from .polynomial import Polynomial, natural_key

AND = "AND"
OR = "OR"
BASIC = "BASIC"
GATES = (AND, OR, BASIC)

MAX_SHANNON_VARIABLES = 20


class ProbabilityOverflowWarning(UserWarning):
    """Rare-event approximation produced a value above 1."""


@dataclass(frozen=True)
class AttackNode:
    gate: str
    children: tuple["AttackNode", ...] = ()
    var: str | None = None
    id: str = ""
    description: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if self.gate not in GATES:
            raise ValueError(f"unknown gate {self.gate!r}")
        if self.gate == BASIC:
            if self.children or not self.var:
                raise ValueError("BASIC nodes carry a variable and no children")
        elif self.var is not None:
            raise ValueError(f"{self.gate} node {self.id!r} cannot carry a variable")

    @property
    def is_basic(self) -> bool:
        return self.gate == BASIC

    def __str__(self):
        if self.is_basic:
            return self.var
        return f"{self.gate}({', '.join(str(c) for c in self.children)})"


def basic(var: str, id: str = "", description: str = "") -> AttackNode:
    return AttackNode(BASIC, (), var, id or var, description)


def and_(*children: AttackNode, id: str = "", description: str = "") -> AttackNode:
    return AttackNode(AND, children, None, id, description)


def or_(*children: AttackNode, id: str = "", description: str = "") -> AttackNode:
    return AttackNode(OR, children, None, id, description)


def leaves(tree: AttackNode) -> Iterator[AttackNode]:
    """BASIC nodes in depth-first order, shared subtrees visited once per path."""
    if tree.is_basic:
        yield tree
        return
    for c in tree.children:
        yield from leaves(c)


def nodes(tree: AttackNode) -> Iterator[AttackNode]:
    yield tree
    for c in tree.children:
        yield from nodes(c)


def variables(tree: AttackNode) -> list[str]:
    return sorted({leaf.var for leaf in leaves(tree)}, key=natural_key)


def duplicate_ids(tree: AttackNode) -> list[str]:
    """Non-empty ids carried by more than one distinct node."""
    by_id: dict[str, set[AttackNode]] = {}
    for n in nodes(tree):
        if n.id:
            by_id.setdefault(n.id, set()).add(n)
    return sorted((i for i, ns in by_id.items() if len(ns) > 1), key=natural_key)


def _check(tree: AttackNode, a: Mapping[str, float]) -> None:
    missing = {v for v in variables(tree) if v not in a}
    if missing:
        raise UnassignedVariable(missing)
    for v in variables(tree):
        p = a[v]
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability of {v} is {p}, outside [0, 1]")


def _approx(node: AttackNode, a: Mapping[str, float]) -> float:
    if node.is_basic:
        return float(a[node.var])
    vals = [_approx(c, a) for c in node.children]
    if node.gate == OR:
        return math.fsum(vals)
    return math.prod(vals)


def eval_approx(tree: AttackNode, a: Mapping[str, float]) -> float:
    """Rare-event value; warns with :class:`ProbabilityOverflowWarning` above 1."""
    _check(tree, a)
    value = _approx(tree, a)
    if value > 1.0:
        warnings.warn(f"rare-event approximation gave {value:.6g} > 1", ProbabilityOverflowWarning, stacklevel=2)
    return value


def _independent(node: AttackNode, a: Mapping[str, float]) -> float:
    if node.is_basic:
        return float(a[node.var])
    vals = [_independent(c, a) for c in node.children]
    if node.gate == AND:
        return math.prod(vals)
    if not vals:
        return 0.0
    if any(v >= 1.0 for v in vals):
        return 1.0
    # 1 - prod(1 - p) without cancellation when every p is tiny
    return -math.expm1(math.fsum(math.log1p(-v) for v in vals))


def eval_exact(tree: AttackNode, a: Mapping[str, float]) -> float:
    """Exact top-event probability under independent basic events.

    Variables occurring at more than one leaf are conditioned on (Shannon
    expansion); with those fixed, every gate's inputs are independent.  Up to
    ``MAX_SHANNON_VARIABLES`` repeated variables are supported.
    """
    _check(tree, a)
    counts = Counter(leaf.var for leaf in leaves(tree))
    repeated = sorted((v for v, n in counts.items() if n > 1), key=natural_key)
    if len(repeated) > MAX_SHANNON_VARIABLES:
        raise TreeTooLarge(f"{len(repeated)} repeated variables exceed the limit of {MAX_SHANNON_VARIABLES}")
    if not repeated:
        return _independent(tree, a)
    total = 0.0
    cond = dict(a)
    for bits in itertools.product((0, 1), repeat=len(repeated)):
        weight = 1.0
        for v, b in zip(repeated, bits):
            p = float(a[v])
            weight *= p if b else 1.0 - p
            cond[v] = float(b)
        if weight:
            total += weight * _independent(tree, cond)
    return min(max(total, 0.0), 1.0)


def symbolic(tree: AttackNode, semantics: str = "approx") -> Polynomial:
    """Expanded canonical polynomial of the tree.

    ``exact`` expands ``1 - prod(1 - p)`` for OR gates and reduces ``x^2`` to
    ``x``, which makes the polynomial the exact probability for independent
    basic events.
    """
    if semantics not in ("approx", "exact"):
        raise ValueError(f"unknown semantics {semantics!r}")
    exact = semantics == "exact"

    def walk(node: AttackNode) -> Polynomial:
        if node.is_basic:
            return Polynomial.var(node.var)
        parts = [walk(c) for c in node.children]
        if node.gate == AND:
            out = Polynomial.const(1)
            for p in parts:
                out = out * p
                if exact:
                    out = out.multilinear()
            return out
        if not exact:
            out = Polynomial()
            for p in parts:
                out = out + p
            return out
        miss = Polynomial.const(1)
        for p in parts:
            miss = (miss * (1 - p)).multilinear()
        return 1 - miss

    return walk(tree)


def substitute(p: Polynomial, bindings: Mapping[str, int | str]) -> Polynomial:
    """Set variables to 0 or 1 or rename them onto another variable."""
    return p.substitute(bindings)


def compose_runaway(server: Polynomial, bpcs: Polynomial, hmi: Polynomial, as_printed: bool = False) -> Polynomial:
    """Server compromise followed by either the BPCS or the HMI-BPCS route.

    ``as_printed`` rewrites ``c18`` to ``c8`` in the HMI route, reproducing the
    runaway bracket as it appears in print (``c8*c21`` instead of
    ``c18*c21``), for side-by-side comparison.
    """
    if as_printed:
        hmi = hmi.substitute({"c18": "c8"})
    return server * (bpcs + hmi)


def minimal_cut_sets(tree: AttackNode) -> list[frozenset[str]]:
    """Minimal sets of basic events that make the root true.

    Sorted by size, then lexicographically in natural variable order.
    """

    def minimize(sets: set[frozenset[str]]) -> set[frozenset[str]]:
        ordered = sorted(sets, key=len)
        kept: list[frozenset[str]] = []
        for s in ordered:
            if not any(k <= s for k in kept):
                kept.append(s)
        return set(kept)

    def walk(node: AttackNode) -> set[frozenset[str]]:
        if node.is_basic:
            return {frozenset([node.var])}
        child_sets = [walk(c) for c in node.children]
        if node.gate == OR:
            out: set[frozenset[str]] = set().union(*child_sets) if child_sets else set()
        else:
            out = {frozenset()}
            for cs in child_sets:
                out = minimize({a | b for a in out for b in cs})
        return minimize(out)

    result = walk(tree)
    return sorted(result, key=lambda s: (len(s), [natural_key(v) for v in sorted(s, key=natural_key)]))
