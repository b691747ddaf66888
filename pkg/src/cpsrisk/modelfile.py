"""Model bundle files: parsing, validation and emission.

One line-oriented grammar serves every input file::

    # comment
    [section]            or   [section argument]
    key = value          lists are comma-separated

Section kinds: ``automaton``, ``events``, ``mode <id>``, ``transitions``,
``annotations``, ``envelope``, ``flow <name>``, ``controller <name>``,
``actuators``, ``tree <name>``, ``node <id>`` (belongs to the preceding
tree), ``assignment``, ``risk``, ``substitution <name>``, ``analysis`` and
``include``.  ``include`` entries name further files, resolved relative to
the including file.  A file whose first non-blank character is ``{`` is read
as the JSON encoding of the same document.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .attack import BASIC, GATES, AttackNode
from .automaton import (
    Envelope,
    Event,
    HybridAutomaton,
    Mode,
    Transition,
    VariableId,
    product_of_switches,
    validate_automaton,
)
from .dynamics import CstrFlow, CstrParams, HybridSystem, LinearFlow, PidParams
from .errors import CpsRiskError, CrossRefError, ParseError
from .hazards import ActuatorAction, ActuatorMap
from .risk import RiskParams

FORMAT_TAG = "cpsrisk-model"
FORMAT_VERSION = 1

_ARG_SECTIONS = {"mode", "flow", "controller", "tree", "node", "substitution"}
_PLAIN_SECTIONS = {
    "automaton",
    "events",
    "transitions",
    "annotations",
    "envelope",
    "actuators",
    "assignment",
    "risk",
    "analysis",
    "include",
}
_CSTR_FIELDS = [f.name for f in fields(CstrParams)]
_RISK_FIELDS = [f.name for f in fields(RiskParams)]
_ANALYSIS_DEFAULTS = {
    "horizon": 120.0,
    "dt": 0.01,
    "root": None,
    "excursion_time": 0.0,
    "detection_time": 0.0,
    "bound": None,
    "runaway": None,
    "corporate_var": "P_c",
    "design_set": "design",
    "as_printed": False,
}


class ValidationFailed(CpsRiskError):
    def __init__(self, report):
        self.report = report
        super().__init__("model failed validation:\n" + "\n".join(str(i) for i in report.errors))


@dataclass
class _Entry:
    key: str
    value: str
    line: int
    col: int


@dataclass
class _Section:
    kind: str
    arg: str
    line: int
    entries: list[_Entry] = field(default_factory=list)


def _lex(text: str, path) -> list[_Section]:
    sections: list[_Section] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("unterminated section header", path, lineno, len(raw))
            words = stripped[1:-1].split()
            col = raw.index("[") + 2
            if not words:
                raise ParseError("empty section header", path, lineno, col)
            kind, arg = words[0], " ".join(words[1:])
            if kind in _ARG_SECTIONS and not arg:
                raise ParseError(f"section [{kind}] needs a name", path, lineno, col)
            if kind not in _ARG_SECTIONS | _PLAIN_SECTIONS:
                raise ParseError(f"unknown section kind {kind!r}", path, lineno, col)
            sections.append(_Section(kind, arg, lineno))
            continue
        if "=" not in raw:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ParseError("expected 'key = value'", path, lineno, col)
        if not sections:
            raise ParseError("entry before any section header", path, lineno, 1)
        eq = raw.index("=")
        key = raw[:eq].strip()
        value = raw[eq + 1 :]
        vcol = eq + 2 + (len(value) - len(value.lstrip()))
        value = value.strip()
        if " #" in value:
            value = value[: value.index(" #")].rstrip()
        if not key:
            raise ParseError("empty key", path, lineno, 1)
        sections[-1].entries.append(_Entry(key, value, lineno, vcol))
    return sections


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",")] if value.strip() else []


def _float(e: _Entry, path, text: str | None = None) -> float:
    text = e.value if text is None else text
    try:
        return float(text)
    except ValueError:
        col = e.col + max(e.value.find(text), 0)
        raise ParseError(f"{e.key}: expected a number, got {text!r}", path, e.line, col) from None


def _floats(e: _Entry, path) -> list[float]:
    return [_float(e, path, t) for t in _split(e.value)]


def _bool(e: _Entry, path) -> bool:
    v = e.value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ParseError(f"{e.key}: expected a boolean, got {e.value!r}", path, e.line, e.col)


def _event_key(text: str, e: _Entry, path) -> tuple[str, int]:
    sw, sep, val = text.strip().partition(":")
    if not sep or val.strip() not in ("0", "1") or not sw.strip():
        raise ParseError(f"event must look like 'switch:0' or 'switch:1', got {text.strip()!r}", path, e.line, e.col)
    return sw.strip(), int(val)


def _empty_doc() -> dict:
    return {
        "automaton": {
            "switches": [],
            "variables": [],
            "initial_mode": None,
            "init_state": [],
            "product_of_switches": None,
            "flow": None,
            "modes": [],
            "events": [],
            "transitions": [],
            "annotations": {},
        },
        "envelope": {},
        "flows": {},
        "controllers": {},
        "actuators": {},
        "attack_trees": {},
        "assignment": {},
        "risk": None,
        "substitutions": {},
        "analysis": {},
    }


def _doc_from_text(text: str, path, doc: dict, sources: dict, seen: set) -> None:
    base = Path(path).parent if path is not None else Path(".")
    tree_name = None
    aut = doc["automaton"]
    for sec in _lex(text, path):
        k = sec.kind
        if k != "node":
            tree_name = None
        if k == "include":
            for e in sec.entries:
                for rel in _split(e.value):
                    inc = (base / rel).resolve()
                    if inc in seen:
                        raise ParseError(f"include cycle through {rel}", path, e.line, e.col)
                    if not inc.exists():
                        raise ParseError(f"included file {rel} not found", path, e.line, e.col)
                    _load_into(inc, doc, sources, seen | {inc})
        elif k == "automaton":
            for e in sec.entries:
                if e.key == "switches":
                    aut["switches"] = _split(e.value)
                elif e.key == "variables":
                    aut["variables"] = [[n.strip(), u.strip()] for n, _, u in (v.partition(":") for v in _split(e.value))]
                elif e.key == "initial_mode":
                    aut["initial_mode"] = e.value
                elif e.key == "init_state":
                    aut["init_state"] = _floats(e, path)
                elif e.key == "product_of_switches":
                    aut["product_of_switches"] = e.value or "S"
                elif e.key == "flow":
                    aut["flow"] = e.value
                else:
                    raise ParseError(f"unknown automaton key {e.key!r}", path, e.line, 1)
        elif k == "events":
            for e in sec.entries:
                sw, val = _event_key(e.key, e, path)
                aut["events"].append({"switch": sw, "value": val, "label": e.value})
        elif k == "mode":
            mode = {"id": sec.arg, "switches": {}, "flow": aut.get("flow") or "", "annotation": ""}
            for e in sec.entries:
                if e.key == "switches":
                    for item in _split(e.value):
                        sw, val = _event_key(item, e, path)
                        mode["switches"][sw] = val
                elif e.key == "flow":
                    mode["flow"] = e.value
                elif e.key == "annotation":
                    mode["annotation"] = e.value
                else:
                    raise ParseError(f"unknown mode key {e.key!r}", path, e.line, 1)
            aut["modes"].append(mode)
        elif k == "transitions":
            for e in sec.entries:
                for item in _split(e.value):
                    ev, arrow, target = item.partition("->")
                    if not arrow or not target.strip():
                        raise ParseError(f"transition must look like 'switch:0 -> MODE', got {item!r}", path, e.line, e.col)
                    sw, val = _event_key(ev, e, path)
                    aut["transitions"].append({"source": e.key, "event": f"{sw}:{val}", "target": target.strip()})
        elif k == "annotations":
            for e in sec.entries:
                aut["annotations"][e.key] = e.value
        elif k == "envelope":
            for e in sec.entries:
                vals = _floats(e, path)
                if len(vals) != 2:
                    raise ParseError(f"{e.key}: envelope bound needs 'lower, upper'", path, e.line, e.col)
                doc["envelope"][e.key] = vals
        elif k == "flow":
            spec: dict[str, Any] = {}
            for e in sec.entries:
                if e.key == "kind":
                    spec["kind"] = e.value
                elif e.key == "matrix":
                    spec["matrix"] = [[_float(e, path, t) for t in row.split()] for row in e.value.split(";")]
                elif e.key == "offset":
                    spec["offset"] = _floats(e, path)
                else:
                    spec[e.key] = _float(e, path)
            doc["flows"][sec.arg] = spec
        elif k == "controller":
            spec = {}
            for e in sec.entries:
                if e.key == "measured":
                    spec["measured"] = e.value
                elif e.key == "output_limits":
                    spec["output_limits"] = _floats(e, path)
                elif e.key == "manipulated_switchable":
                    spec["manipulated_switchable"] = _bool(e, path)
                else:
                    spec[e.key] = _float(e, path)
            doc["controllers"][sec.arg] = spec
        elif k == "actuators":
            for e in sec.entries:
                parts = _split(e.value)
                if len(parts) != 3:
                    raise ParseError(f"{e.key}: actuator needs 'system, device, action'", path, e.line, e.col)
                doc["actuators"][e.key] = parts
        elif k == "tree":
            tree_name = sec.arg
            tree = doc["attack_trees"].setdefault(tree_name, {"root": None, "nodes": {}})
            for e in sec.entries:
                if e.key == "root":
                    tree["root"] = e.value
                else:
                    raise ParseError(f"unknown tree key {e.key!r}", path, e.line, 1)
        elif k == "node":
            if tree_name is None:
                raise ParseError("[node] section outside a [tree]", path, sec.line, 1)
            nodes = doc["attack_trees"][tree_name]["nodes"]
            if sec.arg in nodes:
                raise ParseError(f"duplicate node id {sec.arg!r}", path, sec.line, 1)
            node = {"gate": None, "children": [], "var": None, "description": ""}
            for e in sec.entries:
                if e.key == "gate":
                    node["gate"] = e.value.upper()
                    if node["gate"] not in GATES:
                        raise ParseError(f"gate must be AND, OR or BASIC, got {e.value!r}", path, e.line, e.col)
                elif e.key == "children":
                    node["children"] = _split(e.value)
                elif e.key == "var":
                    node["var"] = e.value
                elif e.key == "description":
                    node["description"] = e.value
                else:
                    raise ParseError(f"unknown node key {e.key!r}", path, e.line, 1)
            if node["gate"] is None:
                raise ParseError(f"node {sec.arg!r} has no gate", path, sec.line, 1)
            nodes[sec.arg] = node
            tree = doc["attack_trees"][tree_name]
            if tree["root"] is None:
                tree["root"] = sec.arg
        elif k == "assignment":
            for e in sec.entries:
                p = _float(e, path)
                if not 0.0 <= p <= 1.0:
                    raise ParseError(f"{e.key}: probability {p} outside [0, 1]", path, e.line, e.col)
                doc["assignment"][e.key] = p
        elif k == "risk":
            risk = doc["risk"] = doc["risk"] or {}
            for e in sec.entries:
                if e.key not in _RISK_FIELDS:
                    raise ParseError(f"unknown risk key {e.key!r}", path, e.line, 1)
                risk[e.key] = _float(e, path)
        elif k == "substitution":
            pairs = doc["substitutions"].setdefault(sec.arg, [])
            for e in sec.entries:
                v = e.value
                if v in ("0", "1"):
                    pairs.append([e.key, int(v)])
                elif v and (v[0].isalpha() or v[0] == "_"):
                    pairs.append([e.key, v])
                else:
                    raise ParseError(f"{e.key}: substitution must be 0, 1 or a variable, got {v!r}", path, e.line, e.col)
        elif k == "analysis":
            an = doc["analysis"]
            for e in sec.entries:
                if e.key in ("horizon", "dt", "excursion_time", "detection_time", "bound"):
                    an[e.key] = _float(e, path)
                elif e.key == "runaway":
                    an[e.key] = _split(e.value)
                elif e.key == "as_printed":
                    an[e.key] = _bool(e, path)
                elif e.key in ("root", "corporate_var", "design_set"):
                    an[e.key] = e.value
                else:
                    raise ParseError(f"unknown analysis key {e.key!r}", path, e.line, 1)


def _load_into(path: Path, doc: dict, sources: dict, seen: set) -> None:
    data = Path(path).read_bytes()
    sources[str(path)] = hashlib.sha256(data).hexdigest()
    text = data.decode("utf-8")
    if text.lstrip().startswith("{"):
        try:
            incoming = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, path, exc.lineno, exc.colno) from None
        _merge_json(incoming, doc)
    else:
        _doc_from_text(text, path, doc, sources, seen)


def _merge_json(incoming: Mapping, doc: dict) -> None:
    if incoming.get("format", FORMAT_TAG) != FORMAT_TAG:
        raise ParseError(f"unsupported JSON format tag {incoming.get('format')!r}")
    for key, value in incoming.items():
        if key in ("format", "version"):
            continue
        if key not in doc:
            raise ParseError(f"unknown top-level key {key!r}")
        if key == "automaton":
            doc["automaton"].update(value)
        elif key == "envelope":
            doc["envelope"].update(
                {n: [-math.inf if lo is None else lo, math.inf if hi is None else hi] for n, (lo, hi) in value.items()}
            )
        elif key == "risk":
            doc["risk"] = value
        else:
            doc[key].update(value)


@dataclass
class ModelBundle:
    automaton: HybridAutomaton
    envelope: Envelope
    flows: dict[str, CstrParams | dict] = field(default_factory=dict)
    controllers: dict[str, PidParams] = field(default_factory=dict)
    actuator_map: ActuatorMap = field(default_factory=lambda: ActuatorMap({}))
    attack_trees: dict[str, AttackNode] = field(default_factory=dict)
    assignment: dict[str, float] = field(default_factory=dict)
    risk: RiskParams | None = None
    substitutions: dict[str, list[tuple[str, int | str]]] = field(default_factory=dict)
    analysis: dict[str, Any] = field(default_factory=lambda: dict(_ANALYSIS_DEFAULTS))
    sources: dict[str, str] = field(default_factory=dict, compare=False)

    def system(self) -> HybridSystem:
        factories = {}
        ctrls = tuple(self.controllers.values())
        for name, spec in self.flows.items():
            if isinstance(spec, CstrParams):
                factories[name] = lambda m, p=spec: CstrFlow(p, m, ctrls)
            else:
                factories[name] = lambda m, s=spec: LinearFlow(s["matrix"], s.get("offset"))
        return HybridSystem(self.automaton, factories)


def _build_tree(name: str, spec: Mapping) -> AttackNode:
    nodes = spec.get("nodes", {})
    root = spec.get("root")
    if root not in nodes:
        raise CrossRefError("attack-tree node", str(root), f"root of tree {name}")
    built: dict[str, AttackNode] = {}

    def build(nid: str, stack: tuple[str, ...]) -> AttackNode:
        if nid in stack:
            raise CrossRefError("acyclic node", nid, f"cycle in tree {name}: {' -> '.join(stack + (nid,))}")
        if nid in built:
            return built[nid]
        if nid not in nodes:
            raise CrossRefError("attack-tree node", nid, f"tree {name}, child of {stack[-1]}")
        n = nodes[nid]
        gate = n["gate"]
        if gate == BASIC:
            node = AttackNode(BASIC, (), n.get("var") or nid, nid, n.get("description", ""))
        else:
            kids = tuple(build(c, stack + (nid,)) for c in n.get("children", []))
            node = AttackNode(gate, kids, None, nid, n.get("description", ""))
        built[nid] = node
        return node

    try:
        return build(root, ())
    except ValueError as exc:
        raise CrossRefError("well-formed node", root, f"tree {name}: {exc}") from None


def bundle_from_doc(doc: Mapping, sources: Mapping[str, str] | None = None, validate: bool = True) -> ModelBundle:
    a = doc["automaton"]
    variables = [VariableId(n, u) for n, u in a.get("variables", [])]
    labels = {(e["switch"], int(e["value"])): e["label"] for e in a.get("events", [])}
    if a.get("product_of_switches"):
        aut = product_of_switches(
            a["switches"],
            variables,
            a.get("init_state", []),
            labels,
            prefix=a["product_of_switches"],
            flow_ref=a.get("flow") or "",
            annotations=a.get("annotations", {}),
        )
        if a.get("initial_mode"):
            aut = HybridAutomaton(
                aut.switches, aut.variables, aut.modes, aut.events, aut.transitions, a["initial_mode"], aut.init_state
            )
    else:
        events = [Event(sw, val, label) for (sw, val), label in labels.items()]
        by_key = {f"{e.switch}:{e.target_value}": e for e in events}
        annotations = a.get("annotations", {})
        modes = [
            Mode(
                m["id"],
                tuple((s, int(m["switches"][s])) for s in a["switches"] if s in m["switches"])
                + tuple((s, int(v)) for s, v in m["switches"].items() if s not in a["switches"]),
                m.get("flow") or a.get("flow") or "",
                m.get("annotation") or annotations.get(m["id"], ""),
            )
            for m in a.get("modes", [])
        ]
        mode_ids = {m.id for m in modes}
        transitions = []
        for t in a.get("transitions", []):
            for end in (t["source"], t["target"]):
                if end not in mode_ids:
                    raise CrossRefError("mode", end, f"transition {t['source']} -> {t['target']}")
            if t["event"] not in by_key:
                raise CrossRefError("event", t["event"], f"transition {t['source']} -> {t['target']}")
            transitions.append(Transition(t["source"], by_key[t["event"]], t["target"]))
        initial = a.get("initial_mode") or (modes[0].id if modes else "")
        if initial not in mode_ids:
            raise CrossRefError("mode", initial, "initial_mode")
        aut = HybridAutomaton(a["switches"], variables, modes, events, transitions, initial, a.get("init_state", []))

    declared = set(aut.variable_names)
    for name in doc.get("envelope", {}):
        if name not in declared:
            raise CrossRefError("variable", name, "envelope")
    envelope = Envelope.from_mapping({n: tuple(v) for n, v in doc.get("envelope", {}).items()})

    flows: dict[str, CstrParams | dict] = {}
    for name, spec in doc.get("flows", {}).items():
        kind = spec.get("kind", "cstr")
        if kind == "cstr":
            missing = [f for f in _CSTR_FIELDS if f not in spec]
            if missing:
                raise CrossRefError("plant parameter", missing[0], f"flow {name}")
            flows[name] = CstrParams(**{f: float(spec[f]) for f in _CSTR_FIELDS})
        elif kind == "linear":
            flows[name] = {"kind": "linear", "matrix": [list(map(float, r)) for r in spec["matrix"]],
                           "offset": list(map(float, spec.get("offset") or [0.0] * len(spec["matrix"])))}
        else:
            raise CrossRefError("flow kind", kind, f"flow {name}")
    for m in aut.modes:
        if m.flow_ref not in flows:
            raise CrossRefError("flow", m.flow_ref, f"mode {m.id}")

    controllers = {}
    for name, spec in doc.get("controllers", {}).items():
        if spec.get("measured") not in declared:
            raise CrossRefError("variable", str(spec.get("measured")), f"controller {name}")
        controllers[name] = PidParams(
            measured=spec["measured"],
            gain=float(spec["gain"]),
            integral_time=float(spec["integral_time"]),
            derivative_time=float(spec.get("derivative_time", 0.0)),
            setpoint=float(spec["setpoint"]),
            output_limits=tuple(spec["output_limits"]),
            manipulated_switchable=bool(spec.get("manipulated_switchable", True)),
        )

    amap = ActuatorMap({k: ActuatorAction(*v) for k, v in doc.get("actuators", {}).items()})
    if amap.entries:
        bad = amap.unresolved(aut)
        if bad:
            raise CrossRefError("actuator label", bad[0], "event guard")

    trees = {name: _build_tree(name, spec) for name, spec in doc.get("attack_trees", {}).items()}
    risk = RiskParams(**{k: float(v) for k, v in doc["risk"].items()}) if doc.get("risk") else None
    subs = {name: [(v, val) for v, val in pairs] for name, pairs in doc.get("substitutions", {}).items()}
    analysis = dict(_ANALYSIS_DEFAULTS)
    analysis.update(doc.get("analysis", {}))
    if analysis.get("runaway"):
        analysis["runaway"] = list(analysis["runaway"])
        for t in analysis["runaway"]:
            if t not in trees:
                raise CrossRefError("attack tree", t, "analysis.runaway")
    if analysis.get("root") and analysis["root"] not in aut.mode_index:
        raise CrossRefError("mode", analysis["root"], "analysis.root")

    bundle = ModelBundle(aut, envelope, flows, controllers, amap, trees, dict(doc.get("assignment", {})),
                         risk, subs, analysis, dict(sources or {}))
    if validate:
        report = validate_automaton(aut, envelope, flows.keys())
        if report.errors:
            raise ValidationFailed(report)
    return bundle


def load_document(path) -> tuple[dict, dict[str, str]]:
    path = Path(path).resolve()
    doc = _empty_doc()
    sources: dict[str, str] = {}
    _load_into(path, doc, sources, {path})
    return doc, sources


def parse_model(path, validate: bool = True) -> ModelBundle:
    """Parse a model file (text or JSON, includes resolved) into a bundle."""
    doc, sources = load_document(path)
    return bundle_from_doc(doc, sources, validate)


def parse_text(text: str, validate: bool = True) -> ModelBundle:
    doc = _empty_doc()
    if text.lstrip().startswith("{"):
        _merge_json(json.loads(text), doc)
    else:
        _doc_from_text(text, None, doc, {}, set())
    return bundle_from_doc(doc, {}, validate)


def _tree_doc(tree: AttackNode) -> dict:
    nodes: dict[str, dict] = {}
    counter = [0]

    def walk(n: AttackNode) -> str:
        nid = n.id
        if not nid:
            counter[0] += 1
            nid = f"n{counter[0]}"
        if nid in nodes:
            return nid
        if n.is_basic:
            nodes[nid] = {"gate": BASIC, "children": [], "var": n.var, "description": n.description}
        else:
            entry = {"gate": n.gate, "children": [], "var": None, "description": n.description}
            nodes[nid] = entry
            entry["children"] = [walk(c) for c in n.children]
        return nid

    root = walk(tree)
    return {"root": root, "nodes": nodes}


def bundle_to_doc(b: ModelBundle) -> dict:
    aut = b.automaton
    doc = _empty_doc()
    a = doc["automaton"]
    a.update(
        switches=list(aut.switches),
        variables=[[v.name, v.unit] for v in aut.variables],
        initial_mode=aut.initial_mode,
        init_state=list(aut.init_state),
        modes=[{"id": m.id, "switches": dict(m.switch_state), "flow": m.flow_ref, "annotation": m.annotation}
               for m in aut.modes],
        events=[{"switch": e.switch, "value": e.target_value, "label": e.actuator_label} for e in aut.events],
        transitions=[{"source": t.source, "event": t.event.name, "target": t.target} for t in aut.transitions],
    )
    doc["envelope"] = {n: [lo, hi] for n, lo, hi in b.envelope.bounds}
    for name, spec in b.flows.items():
        if isinstance(spec, CstrParams):
            doc["flows"][name] = {"kind": "cstr", **{f: getattr(spec, f) for f in _CSTR_FIELDS}}
        else:
            doc["flows"][name] = dict(spec)
    for name, c in b.controllers.items():
        doc["controllers"][name] = {
            "measured": c.measured,
            "gain": c.gain,
            "integral_time": c.integral_time,
            "derivative_time": c.derivative_time,
            "setpoint": c.setpoint,
            "output_limits": list(c.output_limits),
            "manipulated_switchable": c.manipulated_switchable,
        }
    doc["actuators"] = {k: [v.system, v.device, v.action] for k, v in b.actuator_map.entries.items()}
    doc["attack_trees"] = {name: _tree_doc(t) for name, t in b.attack_trees.items()}
    doc["assignment"] = dict(b.assignment)
    doc["risk"] = {f: getattr(b.risk, f) for f in _RISK_FIELDS} if b.risk else None
    doc["substitutions"] = {k: [list(p) for p in v] for k, v in b.substitutions.items()}
    doc["analysis"] = {k: v for k, v in b.analysis.items() if v is not None}
    return doc


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def emit_model_json(b: ModelBundle) -> str:
    doc = bundle_to_doc(b)
    doc["envelope"] = {
        n: [None if math.isinf(lo) else lo, None if math.isinf(hi) else hi] for n, (lo, hi) in doc["envelope"].items()
    }
    out = {"format": FORMAT_TAG, "version": FORMAT_VERSION, **doc}
    return json.dumps(out, indent=2, sort_keys=False) + "\n"


def emit_model_text(b: ModelBundle) -> str:
    doc = bundle_to_doc(b)
    a = doc["automaton"]
    lines = ["# cpsrisk model bundle", "", "[automaton]"]
    lines.append("switches = " + ", ".join(a["switches"]))
    lines.append("variables = " + ", ".join(f"{n}:{u}" if u else n for n, u in a["variables"]))
    lines.append(f"initial_mode = {a['initial_mode']}")
    lines.append("init_state = " + ", ".join(_num(x) for x in a["init_state"]))
    lines += ["", "[events]"]
    lines += [f"{e['switch']}:{e['value']} = {e['label']}" for e in a["events"]]
    for m in a["modes"]:
        lines += ["", f"[mode {m['id']}]"]
        lines.append("switches = " + ", ".join(f"{s}:{v}" for s, v in m["switches"].items()))
        lines.append(f"flow = {m['flow']}")
        if m["annotation"]:
            lines.append(f"annotation = {m['annotation']}")
    lines += ["", "[transitions]"]
    by_src: dict[str, list[str]] = {}
    for t in a["transitions"]:
        by_src.setdefault(t["source"], []).append(f"{t['event']} -> {t['target']}")
    lines += [f"{s} = {', '.join(v)}" for s, v in by_src.items()]
    if doc["envelope"]:
        lines += ["", "[envelope]"]
        lines += [f"{n} = {_num(lo)}, {_num(hi)}" for n, (lo, hi) in doc["envelope"].items()]
    for name, spec in doc["flows"].items():
        lines += ["", f"[flow {name}]", f"kind = {spec['kind']}"]
        if spec["kind"] == "linear":
            lines.append("matrix = " + "; ".join(" ".join(_num(x) for x in row) for row in spec["matrix"]))
            lines.append("offset = " + ", ".join(_num(x) for x in spec["offset"]))
        else:
            lines += [f"{f} = {_num(spec[f])}" for f in _CSTR_FIELDS]
    for name, c in doc["controllers"].items():
        lines += ["", f"[controller {name}]", f"measured = {c['measured']}"]
        for key in ("gain", "integral_time", "derivative_time", "setpoint"):
            lines.append(f"{key} = {_num(c[key])}")
        lines.append("output_limits = " + ", ".join(_num(x) for x in c["output_limits"]))
        lines.append(f"manipulated_switchable = {str(c['manipulated_switchable']).lower()}")
    if doc["actuators"]:
        lines += ["", "[actuators]"]
        lines += [f"{k} = {', '.join(v)}" for k, v in doc["actuators"].items()]
    for name, t in doc["attack_trees"].items():
        lines += ["", f"[tree {name}]", f"root = {t['root']}"]
        for nid, n in t["nodes"].items():
            lines += [f"[node {nid}]", f"gate = {n['gate']}"]
            if n["gate"] == BASIC:
                lines.append(f"var = {n['var']}")
            else:
                lines.append("children = " + ", ".join(n["children"]))
            if n["description"]:
                lines.append(f"description = {n['description']}")
    if doc["assignment"]:
        lines += ["", "[assignment]"]
        lines += [f"{k} = {_num(v)}" for k, v in doc["assignment"].items()]
    if doc["risk"]:
        lines += ["", "[risk]"]
        lines += [f"{k} = {_num(v)}" for k, v in doc["risk"].items()]
    for name, pairs in doc["substitutions"].items():
        lines += ["", f"[substitution {name}]"]
        lines += [f"{v} = {val}" for v, val in pairs]
    an = doc["analysis"]
    if an:
        lines += ["", "[analysis]"]
        for k, v in an.items():
            if isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, float):
                v = _num(v)
            elif isinstance(v, list):
                v = ", ".join(v)
            lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def emit_model(b: ModelBundle, path, fmt: str = "text") -> None:
    text = emit_model_json(b) if fmt == "json" else emit_model_text(b)
    Path(path).write_text(text, encoding="utf-8", newline="\n")
