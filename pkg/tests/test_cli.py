import subprocess
import sys

import pytest

from fap.cli import format_solution, main, parse_bindings
from fap.normalize import load
from fap.parser import Diagnostic, parse
from fap.values import Valuation


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "fap.cli", *args],
        capture_output=True,
        text=True,
    )


def test_run_formula1_all():
    proc = run_cli("run", "corpus/formula1.fap", "--all")
    assert proc.returncode == 0
    lines = proc.stdout.splitlines()
    assert lines[0] == "x=3 y=2"
    assert "status: SUCCESSFUL" in lines
    assert "leaves: success=1 fail=3 error=0" in lines


def test_run_unsat_exits_one():
    proc = run_cli("run", "corpus/unsat.fap")
    assert proc.returncode == 1
    assert "status: FAILED" in proc.stdout


def test_run_err_exits_two_and_prints_cause():
    proc = run_cli("run", "corpus/err.fap")
    assert proc.returncode == 2
    assert "errors: atom-not-evaluable" in proc.stdout


def test_static_error_exits_three(tmp_path):
    bad = tmp_path / "bad.fap"
    bad.write_text("query x = ;\n")
    proc = run_cli("run", str(bad))
    assert proc.returncode == 3
    assert "syntax error" in proc.stderr
    assert proc.stdout == ""


def test_missing_file_exits_three():
    proc = run_cli("run", "corpus/nope.fap")
    assert proc.returncode == 3


def test_set_bindings_check_a_witness():
    proc = run_cli("run", "corpus/formula1.fap", "--set", "x=3", "--set", "y=2")
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "x=3 y=2"


def test_set_bindings_that_cannot_extend():
    proc = run_cli("run", "corpus/formula1.fap", "--set", "x=2")
    assert proc.returncode == 1


def test_set_unknown_name_is_static_error():
    proc = run_cli("run", "corpus/formula1.fap", "--set", "nope=1")
    assert proc.returncode == 3


def test_trace_text_contains_tree_and_report():
    proc = run_cli("run", "corpus/formula1.fap", "--all", "--trace", "text")
    assert proc.returncode == 0
    assert proc.stdout.startswith("[disjunction]")
    assert "status: SUCCESSFUL" in proc.stdout
    assert proc.stdout.count("fail") >= 3


def test_trace_leaf_sequence_matches_report_counts():
    proc = run_cli("run", "corpus/formula1.fap", "--all", "--trace", "text")
    tree, _, rep = proc.stdout.partition("\nstatus: ")
    leaves = [
        line.strip().split()[0].split("(")[0]
        for line in tree.splitlines()
        if line.strip().startswith(("success", "fail", "error"))
    ]
    counts = (leaves.count("success"), leaves.count("fail"), leaves.count("error"))
    want = next(
        line for line in proc.stdout.splitlines() if line.startswith("leaves:")
    )
    assert want == f"leaves: success={counts[0]} fail={counts[1]} error={counts[2]}"


def test_trace_dot_is_pure_dot_on_stdout():
    proc = run_cli("run", "corpus/formula1.fap", "--all", "--trace", "dot")
    assert proc.returncode == 0
    assert proc.stdout.startswith("digraph")
    assert proc.stdout.rstrip().endswith("}")
    assert "status: SUCCESSFUL" in proc.stderr


def test_liberal_flag_changes_outcome():
    strict = run_cli("run", "corpus/err.fap")
    assert strict.returncode == 2
    # NOT over an open failed operand only works liberally
    import tempfile, os

    with tempfile.NamedTemporaryFile(
        "w", suffix=".fap", delete=False, dir="."
    ) as handle:
        handle.write("query NOT (0 = 1 AND x = y) AND x = 5;\n")
        name = handle.name
    try:
        assert run_cli("run", name).returncode == 2
        liberal = run_cli("run", name, "--neg", "liberal")
        assert liberal.returncode == 0
        assert liberal.stdout.splitlines()[0] == "x=5"
    finally:
        os.unlink(name)


def test_gen_is_deterministic_and_parseable():
    a = run_cli("gen", "--seed", "11", "--depth", "4")
    b = run_cli("gen", "--seed", "11", "--depth", "4")
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout
    parse(a.stdout)


def test_gen_to_file(tmp_path):
    out = tmp_path / "g.fap"
    proc = run_cli("gen", "--seed", "5", "--out", str(out))
    assert proc.returncode == 0
    parse(out.read_text())


def test_queens_corpus_file():
    proc = run_cli("run", "corpus/queens8.fap")
    assert proc.returncode == 0
    pairs = dict(
        p.split("=") for p in proc.stdout.splitlines()[0].split() if "=" in p
    )
    rows = [int(pairs[f"q[{i}]"]) for i in range(1, 9)]
    assert sorted(rows) == list(range(1, 9))
    assert all(
        abs(rows[a] - rows[b]) != b - a
        for a in range(8)
        for b in range(a + 1, 8)
    )


def test_squares_corpus_file_runs_unmodified():
    # the bundled program is plain text the generic runner can solve; sizes
    # and pins arrive through ordinary --set bindings
    proc = run_cli(
        "run", "corpus/squares_5x4.fap", "--neg", "liberal",
        "--set", "Sizes[1]=4", "--set", "Sizes[2]=1", "--set", "Sizes[3]=1",
        "--set", "Sizes[4]=1", "--set", "Sizes[5]=1",
    )
    assert proc.returncode == 0
    solution = proc.stdout.splitlines()[0]
    assert "posX[1]=1" in solution and "posY[1]=1" in solution
    assert "posX[2]=5" in solution


def test_first_n_limits_solutions():
    import tempfile, os

    with tempfile.NamedTemporaryFile(
        "w", suffix=".fap", delete=False, dir="."
    ) as handle:
        handle.write("query x = 1 OR x = 2 OR x = 3;\n")
        name = handle.name
    try:
        two = run_cli("run", name, "--first", "2")
        assert [l for l in two.stdout.splitlines() if l.startswith("x=")] == [
            "x=1", "x=2",
        ]
        everything = run_cli("run", name, "--all")
        assert [l for l in everything.stdout.splitlines() if l.startswith("x=")] == [
            "x=1", "x=2", "x=3",
        ]
    finally:
        os.unlink(name)


def test_squares_subcommand():
    proc = run_cli("squares", "5", "4", "4", "1", "1", "1", "1")
    assert proc.returncode == 0
    assert "verified: coverage and disjointness hold" in proc.stdout
    assert "placement: 1:(1,1)" in proc.stdout


def test_squares_failure_exit():
    proc = run_cli("squares", "4", "3", "3", "3")
    assert proc.returncode == 1
    assert "status: FAILED" in proc.stdout


def test_squares_with_pin():
    proc = run_cli("squares", "5", "4", "4", "1", "1", "1", "1",
                   "--set", "posX[1]=1", "--set", "posY[1]=1")
    assert proc.returncode == 0


def test_squares_rejects_other_bindings():
    proc = run_cli("squares", "2", "1", "1", "1", "--set", "Sizes[1]=2")
    assert proc.returncode == 3


def test_run_exit_code_via_main_in_process(capsys):
    code = main(["run", "corpus/formula1.fap", "--all"])
    out = capsys.readouterr().out
    assert code == 0 and out.splitlines()[0] == "x=3 y=2"


# -- binding parser unit tests ----------------------------------------------------

def test_parse_bindings_scalars_and_cells():
    program = load("array a[1..2, 0..0] : int;\nquery x = 1 AND a[1, 0] = 2;")
    v = parse_bindings(program, ["x=5", "a[1,0]=7"])
    assert v == Valuation({"x": 5}, {("a", (1, 0)): 7})


def test_parse_bindings_rejects_bad_input():
    program = load("array a[1..2] : int;\nquery x = 1 AND a[1] = 0;")
    for bad in ("y=1", "a[3]=1", "a[1,2]=1", "x=TRUE", "x=", "a[1]=TRUE", "x=1x"):
        with pytest.raises(Diagnostic):
            parse_bindings(program, [bad])


def test_parse_bindings_rejects_duplicates():
    program = load("query x = 1;")
    with pytest.raises(Diagnostic):
        parse_bindings(program, ["x=1", "x=2"])


def test_format_solution_empty_and_sorted():
    assert format_solution(Valuation()) == "(empty)"
    v = Valuation({"b": 1, "a": 2}, {("z", (1,)): True})
    assert format_solution(v) == "a=2 b=1 z[1]=TRUE"
