import json

import pytest

from topword.cli import ScriptError, main, parse, print_script, read

ABBA = """\
(registry (0 Z) (1 Z) (tail Z))
(defword w (cat (lit 0 1) (lit 1 1)))
(defword abba (cat (lit 0 1) (lit 1 1) (lit 1 -1) (lit 0 -1)))
(defword aba (cat (lit 0 1) (lit 1 1) (lit 0 -1)))
(defword x (omega (tail (power (index affine 1 0) (exp (default affine 0 1))))))
"""


@pytest.fixture
def script(tmp_path):
    def make(text, name="s.tw"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_single_word():
    sc = parse("(defword w (cat (lit 0 1) (lit 1 1)))")
    assert list(sc.words) == ["w"]


def test_unbalanced_reports_location():
    with pytest.raises(ScriptError) as e:
        read("(defword w\n  (cat (lit 0 1)")
    assert (e.value.line, e.value.col) == (2, 3)
    with pytest.raises(ScriptError) as e:
        read("(a))")
    assert (e.value.line, e.value.col) == (1, 4)


def test_identity_letter_rejected():
    with pytest.raises(ScriptError) as e:
        parse("(defword w (lit 0 0))")
    assert e.value.line == 1


def test_unknown_form_and_undefined_word():
    with pytest.raises(ScriptError):
        parse("(frobnicate 1)")
    with pytest.raises(ScriptError):
        parse("(defword w (cat v))")
    with pytest.raises(ScriptError):
        parse("(defword w (lit 0 1))\n(defword w (lit 0 2))")


def test_print_parse_round_trip():
    sc = parse(ABBA)
    text = print_script(sc)
    again = parse(text)
    assert print_script(again) == text
    assert list(again.words) == list(sc.words)


def test_eq_reflexive(capsys, script):
    code, out, _ = run(capsys, "eq", script(ABBA), "w", "w", "-N", "5")
    assert code == 0
    assert json.loads(out) == {"equal_to_depth": 5, "result": True}


def test_eq_differs_exit_1(capsys, script):
    code, out, _ = run(capsys, "eq", script(ABBA), "w", "aba", "-N", "3")
    assert code == 1 and json.loads(out)["result"] is False


def test_scheme_two_components(capsys, script):
    code, out, _ = run(capsys, "scheme", script(ABBA), "abba", "-N", "2")
    assert code == 0
    rows = json.loads(out)["scheme"]
    assert len(rows) == 2
    assert sorted(r["group"] for r in rows) == [0, 1]


def test_scheme_none_exit_1(capsys, script):
    code, out, _ = run(capsys, "scheme", script(ABBA), "aba", "-N", "2")
    assert code == 1 and json.loads(out)["scheme"] is None


def test_nastyword_emit_then_project(capsys, script):
    code, out, _ = run(capsys, "build", "nastyword", "--emit")
    assert code == 0
    assert out == "(registry (tail (zmod 2)))\n(defword W (nastyword 0))\n"
    code, out, _ = run(capsys, "project", script(out, "w.tw"), "W", "-N", "2")
    assert code == 0
    letters = json.loads(out)
    assert len(letters) == 7


def test_reduce_and_reduced(capsys, script):
    p = script(ABBA)
    code, out, _ = run(capsys, "reduce", p, "abba", "-N", "3")
    assert code == 0 and json.loads(out)["letters"] == []
    code, out, _ = run(capsys, "reduced", p, "x", "-N", "4")
    assert code == 0 and json.loads(out)["verdict"] == "CertifiedReduced"


def test_fine_member(capsys, script):
    code, out, _ = run(capsys, "fine", script(ABBA), "x", "--family", "x", "-N", "4")
    assert code == 0 and json.loads(out)["result"] == "member"


def test_embeddings(capsys, script):
    code, out, _ = run(capsys, "embeddings", script(ABBA), "x", "--profile", "0,1", "-N", "3")
    assert code == 0 and json.loads(out)["profile"] == [0, 1]


def test_script_error_exit_2(capsys, script):
    code, out, err = run(capsys, "project", script("(defword w (lit 0 0))"), "w")
    assert code == 2 and out == ""
    assert ":1:" in err


def test_missing_file_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "project", str(tmp_path / "nope.tw"), "w")
    assert code == 2 and err.startswith("error:")


def test_undefined_word_exit_2(capsys, script):
    code, _, _ = run(capsys, "project", script(ABBA), "nope")
    assert code == 2


def test_outputs_byte_identical(capsys, script):
    p = script(ABBA)
    first = run(capsys, "project", p, "x", "-N", "4")
    second = run(capsys, "project", p, "x", "-N", "4")
    assert first == second
    assert run(capsys, "sweep", "--seed", "7", "--budget", "200") == run(capsys, "sweep", "--seed", "7", "--budget", "200")


def test_sweep_clean(capsys):
    code, out, _ = run(capsys, "sweep", "--seed", "1", "--budget", "300")
    assert code == 0 and json.loads(out)["failures"] == 0


def test_check_asserts(capsys, script):
    text = ABBA + "(assert-equiv w w 4)\n(assert-reduced x 4)\n(assert-equiv w aba 2)\n"
    code, out, _ = run(capsys, "check", script(text))
    body = json.loads(out)
    assert code == 1 and body["passed"] == 2 and body["failed"] == 1
