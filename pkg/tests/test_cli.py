import io
import json
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

from areaforge.cli import main

CORPUS = Path(__file__).resolve().parents[1] / "corpus"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def test_parse_emits_json():
    code, out, _ = run("parse", str(CORPUS / "sat" / "one.txt"))
    assert code == 0
    assert "constraints" in json.loads(out)


def test_missing_file_is_input_error():
    code, _, err = run("parse", "/nonexistent/formula.txt")
    assert code == 2 and err.startswith("error:")


def test_syntax_error_is_input_error(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("exists X: X + = 1")
    assert run("parse", str(p))[0] == 2


def test_compile_solve_verify(tmp_path):
    inst = tmp_path / "inst.json"
    drawing = tmp_path / "drawing.json"
    assert run("compile", str(CORPUS / "sat" / "one.txt"), "-o", str(inst))[0] == 0
    code, _, err = run("solve", str(inst), "-o", str(drawing), "--restarts", "4")
    assert code == 0
    assert abs(json.loads(err)["values"]["X"] - 1) < 1e-6
    code, out, _ = run("verify", str(inst), str(drawing), "--tol", "1e-9")
    assert code == 0 and json.loads(out)["ok"]


def test_unsat_solve_exits_one(tmp_path):
    inst = tmp_path / "inst.json"
    run("compile", str(CORPUS / "unsat" / "sum_equals_term.txt"), "-o", str(inst))
    code, _, err = run("solve", str(inst), "--restarts", "2")
    assert code == 1 and not json.loads(err)["success"]


def test_realize_stacked_file():
    code, out, _ = run("realize-stacked", str(CORPUS / "stacked_small.json"))
    assert code == 0
    assert set(json.loads(out)) == {"instance", "drawing"}


def test_coplanar_gadget_off(tmp_path):
    off = tmp_path / "g.off"
    code, _, _ = run("coplanar-gadget", "1", "--off", str(off))
    assert code == 0 and off.read_text().startswith("OFF")


def test_solve_triples_reports_formula_check():
    code, _, err = run("solve-triples", str(CORPUS / "uetr" / "shift.txt"), "--values", "Y=1/2")
    assert code == 0 and json.loads(err)["evaluates_true"]
