"""End-to-end analysis: hazards, attack trees, risk and mitigation.

Stages run in a fixed order and any failure is re-raised as a
:class:`StageError` naming the stage.  Reports serialise to JSON (sorted
keys, fixed float formatting) so two runs on the same inputs are
byte-identical once the clock is pinned.
"""

from __future__ import annotations

import datetime as _dt
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .attack import compose_runaway, eval_approx, eval_exact, minimal_cut_sets, symbolic, variables
from .dynamics import classify_modes, hazardous_modes
from .errors import StageError
from .hazards import abstract_attack_tree, hazard_tree, traces
from .mitigation import mitigation_deadline, recovery_actions
from .modelfile import ModelBundle
from .polynomial import Polynomial
from .risk import (
    design_verdict,
    format_sci,
    likelihood_bound,
    normalized_cost,
    reduce_to_design_equation,
    risk_score,
    target_risk,
)

FIXED_CLOCK = "1970-01-01T00:00:00Z"


@dataclass
class PipelineOptions:
    horizon: float | None = None
    dt: float | None = None
    root: str | None = None
    excursion_time: float | None = None
    detection_time: float | None = None
    bound: float | None = None  # None: use the exact likelihood bound
    fixed_clock: str | None = None

    def resolve(self, analysis: dict) -> dict:
        out = {}
        for key in ("horizon", "dt", "root", "excursion_time", "detection_time", "bound"):
            value = getattr(self, key)
            out[key] = analysis.get(key) if value is None else value
        return out


@dataclass
class AnalysisReport:
    hazards: dict
    hazard_tree: dict
    traces: list[str]
    abstract_attack_tree: dict | None = None
    attack: dict | None = None
    risk: dict | None = None
    mitigation: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _tree_dict(node) -> dict:
    if node.is_basic:
        return {"id": node.id, "gate": node.gate, "var": node.var}
    return {"id": node.id, "gate": node.gate, "description": node.description,
            "children": [_tree_dict(c) for c in node.children]}


def run_pipeline(bundle: ModelBundle, options: PipelineOptions | None = None) -> AnalysisReport:
    opts = options or PipelineOptions()
    cfg = opts.resolve(bundle.analysis)
    aut = bundle.automaton
    root = cfg["root"] or aut.initial_mode

    with _Stage("classify"):
        verdicts = classify_modes(bundle.system(), bundle.envelope, cfg["horizon"], cfg["dt"])
        hazardous = hazardous_modes(verdicts)
        hazards = {
            "hazardous_modes": hazardous,
            "modes": {
                m: {
                    "hazardous": v.hazardous,
                    "tau_p": v.crossing_time,
                    "variable": v.violated_variable,
                    "value": v.crossing_value,
                }
                for m, v in verdicts.items()
            },
        }

    with _Stage("hazard_tree"):
        tree = hazard_tree(aut, root, hazardous)
        tree_out = {
            "root": tree.root,
            "nodes": list(tree.nodes),
            "edges": [[e.parent, e.event.actuator_label, e.child] for e in tree.edges],
            "mode_order": list(tree.mode_order),
            "matrix": tree.adjacency.tolist(),
            "leaves": list(tree.hazard_leaves),
        }

    with _Stage("traces"):
        rendered = [t.render() for t in traces(tree)]

    abstract = None
    if bundle.actuator_map.entries:
        with _Stage("abstract_attack_tree"):
            at = abstract_attack_tree(tree, bundle.actuator_map)
            abstract = {
                "tree": _tree_dict(at),
                "cut_sets": [sorted(s) for s in minimal_cut_sets(at)],
            }

    attack = None
    likelihood = None
    if bundle.attack_trees:
        with _Stage("attack"):
            attack = {"trees": {}}
            reduced: dict[str, Polynomial] = {}
            for name, t in bundle.attack_trees.items():
                entry: dict[str, Any] = {
                    "variables": variables(t),
                    "symbolic_approx": str(symbolic(t, "approx")),
                    "cut_sets": [sorted(s) for s in minimal_cut_sets(t)],
                }
                if all(v in bundle.assignment for v in entry["variables"]):
                    entry["approx"] = eval_approx(t, bundle.assignment)
                    entry["exact"] = eval_exact(t, bundle.assignment)
                poly = symbolic(t, "approx")
                if name in bundle.substitutions:
                    poly = reduce_to_design_equation(poly, bundle.substitutions[name])
                    entry["reduced"] = str(poly)
                reduced[name] = poly
                attack["trees"][name] = entry
            names = bundle.analysis.get("runaway")
            if names:
                server, bpcs, hmi = (reduced[n] for n in names)
                runaway = compose_runaway(server, bpcs, hmi, bool(bundle.analysis.get("as_printed")))
                pc = bundle.analysis.get("corporate_var")
                lik_poly = runaway * Polynomial.var(pc) if pc else runaway
                attack["runaway"] = str(runaway)
                attack["likelihood_polynomial"] = str(lik_poly)
                design_set = bundle.analysis.get("design_set")
                if design_set and design_set in bundle.substitutions:
                    attack["design_equation"] = str(
                        reduce_to_design_equation(lik_poly, bundle.substitutions[design_set])
                    )
                if lik_poly.variables() <= set(bundle.assignment):
                    likelihood = lik_poly.evaluate(bundle.assignment)
                    attack["likelihood"] = likelihood

    risk = None
    if bundle.risk is not None:
        with _Stage("risk"):
            q = normalized_cost(bundle.risk)
            r = target_risk(q, bundle.risk.zeta)
            risk = {"q": q, "r": r}
            if q > 0:
                risk["L_max"] = likelihood_bound(q, bundle.risk.zeta)
            bound = cfg["bound"] if cfg["bound"] is not None else risk.get("L_max", 1.0)
            risk["bound"] = bound
            risk["bound_mode"] = "explicit" if cfg["bound"] is not None else "exact"
            if likelihood is not None:
                v = design_verdict(likelihood, bound)
                risk.update(L=likelihood, R=risk_score(likelihood, q), feasible=v.feasible, margin=v.margin)

    mitigation = []
    with _Stage("mitigation"):
        safe = [m for m in verdicts if not verdicts[m].hazardous]
        ts = cfg["excursion_time"] or 0.0
        td = cfg["detection_time"] or 0.0
        for m in hazardous:
            tau = verdicts[m].crossing_time
            mitigation.append(
                {
                    "mode": m,
                    "tau_p": tau,
                    "deadline": mitigation_deadline(tau, ts, td),
                    "recovery": [[e.name, e.actuator_label, t.id] for e, t in recovery_actions(aut, m, safe)],
                }
            )

    clock = opts.fixed_clock or _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    provenance = {
        "tool": "cpsrisk",
        "version": __version__,
        "generated_at": clock,
        "sources": {Path(p).name: h for p, h in sorted(bundle.sources.items())},
        "parameters": {**cfg, "root": root, "excursion_time": cfg["excursion_time"] or 0.0,
                       "detection_time": cfg["detection_time"] or 0.0},
    }
    return AnalysisReport(hazards, tree_out, rendered, abstract, attack, risk, mitigation, provenance)


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def report_json(report: AnalysisReport) -> str:
    return json.dumps(_clean(report.to_dict()), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def report_text(report: AnalysisReport) -> str:
    out = io.StringIO()
    w = out.write
    h = report.hazards
    w("Hazard classification\n")
    for m, v in h["modes"].items():
        if v["hazardous"]:
            w(f"  {m}: hazardous, {v['variable']} leaves the envelope at t = {v['tau_p']:.2f} min\n")
        else:
            w(f"  {m}: safe\n")
    t = report.hazard_tree
    w(f"\nHazard tree (root {t['root']})\n")
    for parent, label, child in t["edges"]:
        w(f"  {parent} -[{label}]-> {child}\n")
    w("\nTraces\n")
    for tr in report.traces:
        w(f"  {tr}\n")
    if report.attack:
        a = report.attack
        w("\nAttack trees\n")
        for name, e in a["trees"].items():
            w(f"  {name}: {e['symbolic_approx']}\n")
            if "approx" in e:
                w(f"    approx {format_sci(e['approx'])}, exact {format_sci(e['exact'])}\n")
            if "reduced" in e:
                w(f"    reduced: {e['reduced']}\n")
        if "runaway" in a:
            w(f"  runaway: {a['runaway']}\n")
        if "design_equation" in a:
            w(f"  design equation: {a['design_equation']}\n")
    if report.risk:
        r = report.risk
        w("\nRisk\n")
        w(f"  q = {r['q']:.4f}\n  r = {format_sci(r['r'])}\n")
        if "L_max" in r:
            w(f"  L_max = {format_sci(r['L_max'])}\n")
        w(f"  bound = {format_sci(r['bound'])} ({r['bound_mode']})\n")
        if "L" in r:
            w(f"  L = {format_sci(r['L'])}\n  R = {format_sci(r['R'])}\n")
            w(f"  design {'feasible' if r['feasible'] else 'INFEASIBLE'}, margin {r['margin']:.3f} decades\n")
    if report.mitigation:
        w("\nMitigation deadlines\n")
        for m in report.mitigation:
            rec = ", ".join(f"{label} -> {target}" for _, label, target in m["recovery"]) or "none"
            w(f"  {m['mode']}: tau_m < {m['deadline']:.2f} min; recovery: {rec}\n")
    p = report.provenance
    w(f"\ncpsrisk {p['version']}, generated {p['generated_at']}\n")
    return out.getvalue()


def _write(text: str, path) -> str:
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def emit_report(report: AnalysisReport, fmt: str = "json", path=None) -> str:
    if fmt not in ("json", "text"):
        raise ValueError(f"unknown report format {fmt!r}")
    return _write(report_json(report) if fmt == "json" else report_text(report), path)


def curve_csv(points: Sequence[tuple[float, float]]) -> str:
    lines = ["log10_p_c,log10_p_cps"]
    lines += [f"{pc:.15g},{pcps:.15g}" for pcps, pc in points]
    return "\n".join(lines) + "\n"


def curve_svg(points: Sequence[tuple[float, float]], width: int = 480, height: int = 360) -> str:
    """Log-log plot of the design boundary: x = log10 P_c, y = log10 P_CPS."""
    margin = 60
    xs = [pc for _, pc in points] or [0.0]
    ys = [pcps for pcps, _ in points] or [0.0]
    x0, x1 = math.floor(min(xs)), math.ceil(max(xs))
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for k in range(x0, x1 + 1):
        parts.append(
            f'<text x="{sx(k):.2f}" y="{height - margin + 16}" font-size="11" text-anchor="middle">1e{k}</text>'
        )
    for k in range(y0, y1 + 1):
        parts.append(f'<text x="{margin - 6}" y="{sy(k) + 4:.2f}" font-size="11" text-anchor="end">1e{k}</text>')
    parts.append(
        f'<text x="{width / 2:.0f}" y="{height - 14}" font-size="13" text-anchor="middle">P_c (log scale)</text>'
    )
    parts.append(
        f'<text x="16" y="{height / 2:.0f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {height / 2:.0f})">P_CPS (log scale)</text>'
    )
    coords = " ".join(f"{sx(pc):.3f},{sy(pcps):.3f}" for pcps, pc in points)
    parts.append(f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{coords}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_curve(points: Sequence[tuple[float, float]], fmt: str = "csv", path=None) -> str:
    """``points`` are ``(log10 P_CPS, log10 P_c)`` pairs as from ``design_curve``."""
    if fmt not in ("csv", "svg"):
        raise ValueError(f"unknown curve format {fmt!r}")
    return _write(curve_csv(points) if fmt == "csv" else curve_svg(points), path)
