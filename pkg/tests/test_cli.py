import json
import re
from pathlib import Path

import pytest
from click.testing import CliRunner

from sloppy.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, EXIT_RESOURCE, main

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
PROBLEMS = sorted(CORPUS.glob("*.prob"))

WIFE = """\
[signature]
j, p : e
wife_of : e -> e
l : e -> e -> t
var R : e -> t

[source]
l(j#jon, wife_of(j#his))

[target]
R(p#peter)

[parallel]
#jon ~ #peter

[anaphors]
R @s

[colours]
#his : pronoun
"""


def run(*args):
    return CliRunner().invoke(main, ["run", *map(str, args)])


def test_whole_corpus_passes():
    r = run(CORPUS)
    assert r.exit_code == EXIT_OK, r.output
    assert "FAILED" not in r.output
    assert r.output.count("expectations: pass") == len(PROBLEMS)


def test_corpus_passes_without_colours():
    r = run(CORPUS, "--no-colours")
    assert r.exit_code == EXIT_OK, r.output


@pytest.mark.parametrize("mode", ["common-gen", "entail"])
def test_corpus_expectations_hold_under_relations(mode):
    # problems without lines for this mode may still report a tableau bound
    r = run(CORPUS, "--relation", mode)
    assert r.exit_code in (EXIT_OK, EXIT_RESOURCE), r.output
    assert "FAILED" not in r.output
    assert "expectations: pass" in r.output


def test_json_output_is_deterministic():
    a, b = run(CORPUS, "--format", "json"), run(CORPUS, "--format", "json")
    assert a.exit_code == EXIT_OK
    assert a.output == b.output
    data = json.loads(a.output)
    assert [d["problem"] for d in data] == [p.stem for p in PROBLEMS]


def test_json_fields():
    (entry,) = json.loads(run(CORPUS / "e20.prob", "--format", "json").output)
    assert entry["status"] == "ok" and entry["complete"] and not entry["resource_out"]
    assert len(entry["equations"]) == 2
    assert {rd["label"] for rd in entry["readings"]} == {"sloppy", "strict"}
    assert all(set(rd) == {"label", "target", "witness", "proof"} for rd in entry["readings"])
    assert entry["expectation"]["verdict"] == "pass"


def _solutions(output):
    return [int(n) for n in re.findall(r"\((\d+) solutions? for", output)]


@pytest.mark.parametrize("path", PROBLEMS, ids=lambda p: p.stem)
def test_erasing_colours_never_loses_solutions(path):
    coloured = _solutions(run(path).output)
    plain = _solutions(run(path, "--no-colours").output)
    assert plain[0] >= coloured[0]


def test_wife_without_colours_has_four_solutions():
    r = run(CORPUS / "e20.prob", "--no-colours")
    assert "(4 solutions for A" in r.output
    assert r.output.count("mixed") == 2


def test_relation_run_shows_the_proof():
    r = run(CORPUS / "e39c.prob", "--relation", "common-gen", "--axioms", CORPUS / "nasty.ax")
    assert r.exit_code == EXIT_OK, r.output
    assert "sloppy  exists x:e. po(x) & col(x, p) & f(x, rd(x, p, sr(p)))" in r.output
    assert "relation proved:" in r.output
    assert "[negated goal]" in r.output and "Y <- nasty(" in r.output


def test_show_substitutions():
    r = run(CORPUS / "e20.prob", "--show-substitutions")
    assert "A <- \\x:e. l" in r.output


def test_trace_lists_equations():
    r = run(CORPUS / "e20.prob", "--trace")
    assert r.output.count("equation ") == 2 and "unifier " in r.output


def test_bad_file_is_an_input_error(tmp_path):
    bad = tmp_path / "bad.prob"
    bad.write_text("[signature]\nj : e\n[source]\nl(j)\n")
    r = run(bad)
    assert r.exit_code == EXIT_INPUT
    assert "input error" in r.output


def test_input_error_outranks_other_results(tmp_path):
    bad = tmp_path / "bad.prob"
    bad.write_text("[source]\n")
    assert run(bad, CORPUS / "e20.prob").exit_code == EXIT_INPUT


def test_failed_expectation(tmp_path):
    f = tmp_path / "wife.prob"
    f.write_text(WIFE + "\n[expect]\nreadings = 3\n")
    r = run(f)
    assert r.exit_code == EXIT_FAIL
    assert "FAILED line" in r.output and "got 2" in r.output


def test_truncated_search_without_expectations(tmp_path):
    f = tmp_path / "wife.prob"
    f.write_text(WIFE)
    r = run(f, "--no-colours", "--max-solutions", "1")
    assert r.exit_code == EXIT_RESOURCE
    assert "search truncated" in r.output and "note:" in r.output
    assert run(f).exit_code == EXIT_OK


def test_mode_specific_expectations_are_ignored_in_other_modes(tmp_path):
    f = tmp_path / "wife.prob"
    f.write_text(WIFE + "\n[expect]\n{no-colours} solutions = 4\nsolutions = 2\n")
    assert run(f).exit_code == EXIT_OK
    assert run(f, "--no-colours").exit_code == EXIT_OK
