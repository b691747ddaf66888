import json
import textwrap

import pytest

import cpsrisk
from cpsrisk.errors import CrossRefError, ParseError
from cpsrisk.modelfile import (
    ValidationFailed,
    emit_model,
    emit_model_json,
    emit_model_text,
    parse_model,
    parse_text,
)
from cpsrisk.polynomial import Polynomial
from cpsrisk.attack import symbolic

MINIMAL = """\
[automaton]
switches = valve
variables = x:m
init_state = 0.5
product_of_switches = M
flow = lin

[events]
valve:0 = Vc
valve:1 = Vo

[envelope]
x = 0, 1

[flow lin]
kind = linear
matrix = 0
offset = 0.1
"""


def write(tmp_path, text, name="m.model"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def test_bundled_structure(bundle):
    aut = bundle.automaton
    assert (len(aut.modes), len(aut.transitions), len(aut.switches)) == (8, 24, 3)
    assert set(bundle.attack_trees) == {"rt_server", "bpcs", "hmi"}
    assert set(bundle.substitutions) == {"rt_server", "bpcs", "hmi", "design"}
    assert bundle.risk.zeta == 6
    assert bundle.envelope.as_dict() == {"L": (0.0, 2.85), "T": (float("-inf"), 550.0)}
    assert len(bundle.sources) == 6


def test_bundled_trees_match_equations(bundle):
    t = bundle.attack_trees
    assert symbolic(t["bpcs"]) == Polynomial.parse(
        "c9 (c3 c4 + (c1 + c2)) + a1 c3 c4 + c8 (a2 c7 + (c5 + c6))")


def test_minimal_model(tmp_path):
    b = parse_model(write(tmp_path, MINIMAL))
    assert [m.id for m in b.automaton.modes] == ["M0", "M1"]
    assert b.flows["lin"]["matrix"] == [[0.0]]
    assert b.attack_trees == {} and b.risk is None


def test_single_mode_without_switches(tmp_path):
    text = """\
    [automaton]
    switches =
    variables = x
    init_state = 0
    initial_mode = only

    [mode only]
    flow = lin

    [flow lin]
    kind = linear
    matrix = -1
    """
    b = parse_model(write(tmp_path, text))
    assert len(b.automaton.modes) == 1 and b.automaton.transitions == ()


def test_unknown_flow(tmp_path):
    with pytest.raises(CrossRefError) as exc:
        parse_model(write(tmp_path, MINIMAL.replace("flow = lin", "flow = missing")))
    assert exc.value.name == "missing"


def test_unknown_envelope_variable(tmp_path):
    with pytest.raises(CrossRefError):
        parse_model(write(tmp_path, MINIMAL.replace("x = 0, 1", "y = 0, 1")))


def test_unmapped_actuator(tmp_path):
    text = MINIMAL + "\n[actuators]\nVc = BPCS, V1, Close\n"
    with pytest.raises(CrossRefError) as exc:
        parse_model(write(tmp_path, text))
    assert exc.value.name == "Vo"


def test_parse_error_position(tmp_path):
    text = MINIMAL.replace("x = 0, 1", "x = 0, high")
    with pytest.raises(ParseError) as exc:
        parse_model(write(tmp_path, text))
    assert exc.value.line == 13
    assert exc.value.column == 8


def test_missing_equals(tmp_path):
    with pytest.raises(ParseError) as exc:
        parse_model(write(tmp_path, "[automaton]\n  switches\n"))
    assert (exc.value.line, exc.value.column) == (2, 3)


def test_unknown_section(tmp_path):
    with pytest.raises(ParseError) as exc:
        parse_model(write(tmp_path, "[nonsense]\n"))
    assert exc.value.line == 1


def test_bad_event_key(tmp_path):
    with pytest.raises(ParseError):
        parse_model(write(tmp_path, MINIMAL.replace("valve:0 = Vc", "valve:2 = Vc")))


def test_include_cycle(tmp_path):
    write(tmp_path, "[include]\nfiles = b.model\n", "a.model")
    write(tmp_path, "[include]\nfiles = a.model\n", "b.model")
    with pytest.raises(ParseError):
        parse_model(tmp_path / "a.model")


def test_dangling_tree_child(tmp_path):
    text = MINIMAL + "\n[tree t]\nroot = r\n[node r]\ngate = OR\nchildren = a, ghost\n[node a]\ngate = BASIC\nvar = a\n"
    with pytest.raises(CrossRefError) as exc:
        parse_model(write(tmp_path, text))
    assert exc.value.name == "ghost"


def test_invalid_automaton_raises_or_reports(tmp_path):
    text = """\
    [automaton]
    switches = s
    variables = x
    init_state = 0
    initial_mode = A

    [events]
    s:0 = c

    [mode A]
    switches = s:1
    flow = lin
    [mode B]
    switches = s:0
    flow = lin
    [mode C]
    switches = s:0
    flow = lin

    [transitions]
    A = s:0 -> B, s:0 -> C

    [flow lin]
    kind = linear
    matrix = 0
    """
    path = write(tmp_path, text)
    with pytest.raises(ValidationFailed) as exc:
        parse_model(path)
    assert "nondeterminism" in exc.value.report.kinds()
    assert parse_model(path, validate=False).automaton.modes[2].id == "C"


def test_round_trip_text(bundle, tmp_path):
    out = tmp_path / "again.model"
    emit_model(bundle, out)
    again = parse_model(out)
    assert again == bundle
    assert emit_model_text(again) == emit_model_text(bundle)


def test_round_trip_json(bundle, tmp_path):
    out = tmp_path / "again.json"
    emit_model(bundle, out, fmt="json")
    assert json.loads(out.read_text())["format"] == "cpsrisk-model"
    assert parse_model(out) == bundle
    assert parse_text(emit_model_json(bundle)) == bundle


def test_round_trip_minimal(tmp_path):
    b = parse_model(write(tmp_path, MINIMAL))
    assert parse_text(emit_model_text(b)) == b


def test_bundled_files_parse_on_their_own():
    from cpsrisk.modelfile import load_document

    doc, _ = load_document(cpsrisk.data_path("hmi.atree"))
    assert doc["attack_trees"]["hmi"]["root"] == "hmi"
    doc, _ = load_document(cpsrisk.data_path("paper_assumptions.subst"))
    assert doc["substitutions"]["design"][0] == ["c7", "c5"]
