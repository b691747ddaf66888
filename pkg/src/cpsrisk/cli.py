"""Command-line entry point: ``cpsrisk <command> [--model FILE] ...``.

Exit codes: 0 success, 2 parse or validation failure, 3 design infeasible
under ``--enforce``, 4 runtime or numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__, data_path
from .attack import eval_approx, eval_exact, minimal_cut_sets, symbolic
from .automaton import validate_automaton
from .dynamics import classify_modes, hazardous_modes, simulate
from .errors import CpsRiskError, CrossRefError, ParseError
from .hazards import abstract_attack_tree, hazard_tree, traces
from .mitigation import MitigationTiming, check_mitigation, recovery_actions
from .modelfile import ValidationFailed, parse_model
from .pipeline import FIXED_CLOCK, PipelineOptions, emit_curve, emit_report, run_pipeline
from .risk import design_curve, format_sci

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_RUNTIME = 4

OUT_DIR_ENV = "CPSRISK_OUT_DIR"


def _out_path(out: str | None) -> Path | None:
    if out is None:
        return None
    p = Path(out)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, out: str | None) -> None:
    path = _out_path(out)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8", newline="\n")


def _load(args, validate: bool = True):
    return parse_model(args.model or data_path("cstr.model"), validate=validate)


def _horizon(args, bundle):
    return args.horizon if args.horizon is not None else bundle.analysis["horizon"]


def _dt(args, bundle):
    return args.dt if args.dt is not None else bundle.analysis["dt"]


def cmd_validate(args) -> int:
    bundle = _load(args, validate=False)
    report = validate_automaton(bundle.automaton, bundle.envelope, bundle.flows.keys())
    aut = bundle.automaton
    print(f"{len(aut.modes)} modes, {len(aut.transitions)} transitions, {len(aut.switches)} switches")
    for issue in report:
        print(issue)
    if report.is_valid:
        print("valid")
        return EXIT_OK
    return EXIT_INVALID


def cmd_simulate(args) -> int:
    bundle = _load(args)
    mode = args.mode or bundle.automaton.initial_mode
    traj = simulate(bundle.system(), mode, _horizon(args, bundle), _dt(args, bundle))
    if args.format == "json":
        doc = {"mode": traj.mode, "names": list(traj.names), "times": traj.times.tolist(),
               "states": traj.states.tolist()}
        _emit(json.dumps(doc) + "\n", args.out)
        return EXIT_OK
    path = _out_path(args.out)
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *traj.names])
        for t, row in zip(traj.times, traj.states):
            w.writerow([f"{t:.10g}", *(f"{x:.10g}" for x in row)])
    finally:
        if path:
            fh.close()
    return EXIT_OK


def cmd_classify(args) -> int:
    bundle = _load(args)
    verdicts = classify_modes(bundle.system(), bundle.envelope, _horizon(args, bundle), _dt(args, bundle))
    if args.format == "json":
        doc = {m: {"hazardous": v.hazardous, "tau_p": v.crossing_time, "variable": v.violated_variable}
               for m, v in verdicts.items()}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return EXIT_OK
    lines = []
    for m, v in verdicts.items():
        if v.hazardous:
            lines.append(f"{m}\thazardous\t{v.violated_variable}\t{v.crossing_time:.3f}")
        else:
            lines.append(f"{m}\tsafe")
    lines.append("hazardous: " + ", ".join(hazardous_modes(verdicts)))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_hazard_tree(args) -> int:
    bundle = _load(args)
    verdicts = classify_modes(bundle.system(), bundle.envelope, _horizon(args, bundle), _dt(args, bundle))
    root = args.mode or bundle.analysis.get("root") or bundle.automaton.initial_mode
    tree = hazard_tree(bundle.automaton, root, hazardous_modes(verdicts))
    lines = [f"{e.parent} -[{e.event.actuator_label}]-> {e.child}" for e in tree.edges]
    lines.append("")
    lines.append("M (rows/cols " + " ".join(tree.mode_order) + ")")
    lines += [" ".join(str(x) for x in row) for row in tree.adjacency]
    lines.append("")
    lines += [t.render() for t in traces(tree)]
    if bundle.actuator_map.entries:
        at = abstract_attack_tree(tree, bundle.actuator_map)
        lines.append("")
        lines.append(f"abstract attack tree: {at}")
        for cs in minimal_cut_sets(at):
            lines.append("  cut set: {" + ", ".join(sorted(cs)) + "}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_attack_eval(args) -> int:
    bundle = _load(args)
    names = [args.tree] if args.tree else list(bundle.attack_trees)
    lines = []
    for name in names:
        if name not in bundle.attack_trees:
            raise CrossRefError("attack tree", name, "attack-eval")
        tree = bundle.attack_trees[name]
        value = (eval_exact if args.semantics == "exact" else eval_approx)(tree, bundle.assignment)
        lines.append(f"{name}\t{args.semantics}\t{format_sci(value)}")
        lines.append(f"  {symbolic(tree, args.semantics)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _pipeline(args, bundle):
    opts = PipelineOptions(
        horizon=args.horizon,
        dt=args.dt,
        bound=args.bound,
        fixed_clock=(args.fixed_clock or FIXED_CLOCK) if args.fixed_clock is not None else None,
    )
    return run_pipeline(bundle, opts)


def cmd_risk(args) -> int:
    bundle = _load(args)
    report = _pipeline(args, bundle)
    r = report.risk
    if r is None:
        print("model has no risk parameters", file=sys.stderr)
        return EXIT_INVALID
    lines = [f"q\t{r['q']:.4f}", f"r\t{format_sci(r['r'])}"]
    if "L_max" in r:
        lines.append(f"L_max\t{format_sci(r['L_max'])}")
    lines.append(f"bound\t{format_sci(r['bound'])}")
    if "L" in r:
        lines += [f"L\t{format_sci(r['L'])}", f"R\t{format_sci(r['R'])}",
                  f"feasible\t{str(r['feasible']).lower()}", f"margin\t{r['margin']:.4f}"]
    if report.attack and "design_equation" in report.attack:
        lines.append(f"design\t{report.attack['design_equation']} <= {format_sci(r['bound'])}")
    _emit("\n".join(lines) + "\n", args.out)
    if args.enforce and r.get("feasible") is False:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_design_curve(args) -> int:
    bound = args.bound if args.bound is not None else 1e-5
    points = design_curve(bound, (args.p_c_min, args.p_c_max), args.points)
    _emit(emit_curve(points, args.format), args.out)
    return EXIT_OK


def cmd_mitigate(args) -> int:
    bundle = _load(args)
    verdicts = classify_modes(bundle.system(), bundle.envelope, _horizon(args, bundle), _dt(args, bundle))
    safe = [m for m, v in verdicts.items() if not v.hazardous]
    modes = [args.mode] if args.mode else hazardous_modes(verdicts)
    ts = args.excursion_time if args.excursion_time is not None else bundle.analysis["excursion_time"]
    td = args.detection_time if args.detection_time is not None else bundle.analysis["detection_time"]
    lines = []
    infeasible = False
    for m in modes:
        v = verdicts[bundle.automaton.mode(m).id]
        if not v.hazardous:
            lines.append(f"{m}\tsafe")
            continue
        verdict = check_mitigation(MitigationTiming(v.crossing_time, ts, td, args.mitigation_time))
        infeasible |= not verdict.feasible
        rec = ", ".join(f"{e.actuator_label} -> {t.id}" for e, t in recovery_actions(bundle.automaton, m, safe))
        lines.append(
            f"{m}\ttau_p {v.crossing_time:.3f}\tdeadline {verdict.deadline:.3f}\t"
            f"{'feasible' if verdict.feasible else 'infeasible'}\trecovery: {rec or 'none'}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_INFEASIBLE if args.enforce and infeasible else EXIT_OK


def cmd_pipeline(args) -> int:
    bundle = _load(args)
    report = _pipeline(args, bundle)
    _emit(emit_report(report, args.format), args.out)
    if args.enforce and report.risk and report.risk.get("feasible") is False:
        return EXIT_INFEASIBLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpsrisk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cpsrisk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, formats=("text",)):
        p = sub.add_parser(name, help=help)
        p.add_argument("--model", help="model file (default: bundled CSTR)")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=formats, default=formats[0], help="output format")
        p.set_defaults(func=func)
        return p

    def sim_opts(p):
        p.add_argument("--horizon", type=float)
        p.add_argument("--dt", type=float)

    add("validate", cmd_validate, "check model structure")
    p = add("simulate", cmd_simulate, "simulate one mode", ("csv", "json"))
    p.add_argument("--mode")
    sim_opts(p)
    p = add("classify", cmd_classify, "label modes hazardous or safe", ("text", "json"))
    sim_opts(p)
    p = add("hazard-tree", cmd_hazard_tree, "hazard tree, traces and abstract attack tree")
    p.add_argument("--mode", help="root mode")
    sim_opts(p)
    p = add("attack-eval", cmd_attack_eval, "evaluate attack trees")
    p.add_argument("tree", nargs="?", help="tree name (default: all)")
    p.add_argument("--semantics", choices=("approx", "exact"), default="approx")
    for name, func, help, formats in (("risk", cmd_risk, "risk score and design check", ("text",)),
                                      ("pipeline", cmd_pipeline, "full analysis report", ("json", "text"))):
        p = add(name, func, help, formats)
        sim_opts(p)
        p.add_argument("--bound", type=float, help="explicit likelihood bound (default: exact bound)")
        p.add_argument("--enforce", action="store_true", help="exit 3 when the design is infeasible")
        p.add_argument("--fixed-clock", nargs="?", const="", default=None,
                       help=f"pin the report timestamp (default {FIXED_CLOCK})")
    p = add("design-curve", cmd_design_curve, "design boundary as CSV or SVG", ("csv", "svg"))
    p.add_argument("--bound", type=float)
    p.add_argument("--p-c-min", type=float, default=1e-5)
    p.add_argument("--p-c-max", type=float, default=1.0)
    p.add_argument("--points", type=int, default=51)
    p = add("mitigate", cmd_mitigate, "mitigation deadlines and recovery actions")
    p.add_argument("--mode")
    sim_opts(p)
    p.add_argument("--excursion-time", type=float)
    p.add_argument("--detection-time", type=float)
    p.add_argument("--mitigation-time", type=float, default=0.0)
    p.add_argument("--enforce", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, CrossRefError, ValidationFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CpsRiskError, ValueError, ArithmeticError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
