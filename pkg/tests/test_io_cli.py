from __future__ import annotations

import json

import numpy as np
import pytest

from wpdkit.cli import EXIT_CAP, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, main
from wpdkit.diagram import weighted_pd
from wpdkit.errors import ParseError, ValidationError
from wpdkit.examples import example_names, example_pair
from wpdkit.filtration import weighted_vr
from wpdkit.io import (
    diagram_from_json,
    diagram_to_json,
    dumps,
    jsonable,
    load_space,
    parse_distance_csv,
    parse_points_csv,
    parse_space_json,
)

UMS_D = [[0, 1, 2, 2], [1, 0, 2, 2], [2, 2, 0, 1], [2, 2, 1, 0]]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# readers


def test_distance_csv():
    X = parse_distance_csv("# a comment\n0,1\n1,0\n\n")
    assert X.n == 2 and X.d[0, 1] == 1.0


def test_csv_errors_carry_line_numbers():
    with pytest.raises(ParseError) as exc:
        parse_distance_csv("0,1\n1,zero\n")
    assert exc.value.line == 2 and "zero" in str(exc.value)
    with pytest.raises(ParseError) as exc:
        parse_distance_csv("0,1,2\n1,0,1\n2,1\n")
    assert exc.value.line == 3
    with pytest.raises(ParseError, match="no data"):
        parse_distance_csv("# nothing\n")
    with pytest.raises(ParseError) as exc:
        parse_points_csv("0,0\n1,1\n2\n")
    assert exc.value.line == 3


def test_matrix_validation_is_not_a_parse_error():
    with pytest.raises(ValidationError):
        parse_distance_csv("0,1\n2,0\n")
    with pytest.raises(ValidationError):
        parse_distance_csv("0,-1\n-1,0\n")


def test_points_csv():
    X = parse_points_csv("0,0\n3,4\n")
    assert X.d[0, 1] == pytest.approx(5.0)


def test_space_json():
    X = parse_space_json(json.dumps({"n": 2, "d": [[0, 1], [1, 0]], "mu": [0.25, 0.75]}))
    assert X.mu.tolist() == [0.25, 0.75]
    assert parse_space_json('{"d": [[0]]}').mu.tolist() == [1.0]
    with pytest.raises(ParseError) as exc:
        parse_space_json('{"d":\n [[0, 1],\n [1 0]]}')
    assert exc.value.line == 3
    with pytest.raises(ValidationError, match='"n"'):
        parse_space_json('{"n": 3, "d": [[0]]}')
    with pytest.raises(ValidationError):
        parse_space_json('{"d": [[0, 1], [1, 0]], "mu": [0.5, 0.6]}')


def test_load_space(tmp_path):
    f = tmp_path / "pts.csv"
    f.write_text("0,0\n0,1\n")
    assert load_space(f, points=True).space.d[0, 1] == 1.0
    with pytest.raises(ParseError, match="cannot read"):
        load_space(tmp_path / "missing.csv")


# writers


def test_jsonable_keeps_output_strict():
    assert jsonable({"a": float("inf"), "b": [np.float64(1.5), np.int64(2)]}) == {"a": "inf", "b": [1.5, 2]}
    assert json.loads(dumps({"x": -np.inf})) == {"x": "-inf"}


@pytest.mark.parametrize("name", example_names())
def test_diagram_json_round_trip(name):
    X, _ = example_pair(name)
    a = weighted_pd(weighted_vr(X), 0)
    back = diagram_from_json(json.loads(dumps(diagram_to_json(a))))
    assert back.diagram.bars == a.diagram.bars
    assert back.weights == pytest.approx(a.weights, abs=1e-15)
    plain = diagram_from_json(diagram_to_json(a.diagram))
    assert plain.bars == a.diagram.bars
    with pytest.raises(ParseError, match="malformed"):
        diagram_from_json({"grid": [0.0]})


# the command line


def test_wpd_on_the_ultrametric_space(capsys, tmp_path):
    f = tmp_path / "ums.csv"
    f.write_text("\n".join(",".join(str(v) for v in row) for row in UMS_D))
    code, out, _ = run(capsys, "wpd", "--input", str(f))
    assert code == EXIT_OK
    obj = json.loads(out)
    assert {(b["birth"], b["death"]): b["mult"] for b in obj["bars"]} == {(0.0, 1.0): 2, (0.0, 2.0): 1}
    assert sum(w["mass"] for w in obj["weights"]) == pytest.approx(1.0)
    assert obj["gdd"] == {"support": [0.0, 1.0, 2.0], "masses": [0.25, 0.25, 0.5]}


def test_wpd_on_one_point(capsys, tmp_path):
    f = tmp_path / "one.json"
    f.write_text('{"n": 1, "d": [[0]]}')
    code, out, _ = run(capsys, "wpd", "--input", str(f))
    obj = json.loads(out)
    assert code == EXIT_OK and obj["bars"] == [] and obj["weights"] == [{"birth": 0.0, "death": 0.0, "mass": 1.0}]


def test_gdd_and_filtration_commands(capsys):
    code, out, _ = run(capsys, "gdd", "--example", "ums", "--side", "Y")
    assert code == EXIT_OK and json.loads(out)["masses"] == [0.25, 0.375, 0.375]
    code, out, _ = run(capsys, "filtration", "--example", "ums", "--zb-degree", "0")
    obj = json.loads(out)
    assert obj["grid"] == [0.0, 1.0, 2.0] and obj["weights"] == [0.25, 0.25, 0.5]
    assert [0, 0, 0] in obj["zb"]["zb"] and [0, 2, 3] in obj["zb"]["zb"]


def test_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n1,x\n")
    code, _, err = run(capsys, "wpd", "--input", str(bad))
    assert code == EXIT_PARSE
    assert json.loads(err) == {"error": "parse", "message": "not a number: 'x' (line 2)", "line": 2}
    code, _, err = run(capsys, "wpd")
    assert code == EXIT_PARSE
    code, _, err = run(capsys, "compare", "--example", "ums", "--p", "0.5")
    assert code == EXIT_PARSE
    asym = tmp_path / "asym.csv"
    asym.write_text("0,1\n2,0\n")
    code, _, err = run(capsys, "wpd", "--input", str(asym))
    assert code == EXIT_VALIDATION and json.loads(err)["error"] == "validation"
    code, _, err = run(capsys, "compare", "--example", "hexagon", "--cap", "4")
    assert code == EXIT_CAP
    payload = json.loads(err)
    assert payload["error"] == "cap" and payload["cap"] == 4 and payload["size"] > 4


def test_compare_identical_inputs_gives_zeros(capsys, tmp_path):
    f = tmp_path / "x.json"
    f.write_text(json.dumps({"d": UMS_D}))
    code, out, _ = run(capsys, "compare", "--input", str(f), "--input2", str(f), "--degree", "0")
    assert code == EXIT_OK
    obj = json.loads(out)
    assert all(d["value"] == 0 for d in obj["distances"])
    assert all(e["value"] == 0 for e in obj["edit_distances"])
    assert all(c["status"] == "HOLDS" for c in obj["stability"])


def test_compare_edit_labels(capsys):
    code, out, _ = run(capsys, "compare", "--example", "ums", "--p", "2", "--suite", "distances")
    obj = json.loads(out)
    assert code == EXIT_OK and "stability" not in obj
    by = {d["metric"]: d for d in obj["distances"]}
    cmet, mmet = obj["edit_distances"]
    assert cmet["relation"] == "2*GH" and cmet["value"] == 2 * by["gh"]["value"]
    assert mmet["relation"] == "2*GW_p" and mmet["value"] == 2 * by["gw"]["value"]
    assert mmet["mode"] == by["gw"]["mode"] == "upper_bound"


def test_compare_boutin_kemper(capsys):
    code, out, _ = run(capsys, "compare", "--example", "boutin-kemper")
    obj = json.loads(out)
    by = {d["metric"]: d for d in obj["distances"]}
    assert code == EXIT_OK
    assert by["wasserstein_gdd"]["value"] == pytest.approx(0.0, abs=1e-12)
    assert by["d_defo"]["value"] == pytest.approx(np.sqrt(10) - 2, abs=1e-12)
    assert by["d_wdefo"]["value"] > 0 and by["d_wdefo"]["mode"] == "exact"
    assert all(c["status"] != "VIOLATED" for c in obj["stability"])


def test_output_is_byte_identical_across_runs(capsys, tmp_path):
    outs = []
    for k in range(2):
        target = tmp_path / f"out{k}.json"
        assert main(["compare", "--example", "ums", "--p", "2", "--output", str(target)]) == EXIT_OK
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_verify_one_example(capsys):
    code, out, _ = run(capsys, "verify", "--example", "ums")
    assert code == EXIT_OK and out.startswith("PASS")
