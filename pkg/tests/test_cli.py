"""The command-line front end and its exit-code contract."""

import os

import pytest

from sluice.cli import main

from conftest import PROGRAMS

TREE = os.path.join(PROGRAMS, "tree.fst")
CROSS = os.path.join(PROGRAMS, "cross.fst")
DOUBLED = os.path.join(PROGRAMS, "cross_doubled.fst")


class TestCheck:
    def test_well_typed_is_silent_success(self, capsys):
        assert main(["check", TREE]) == 0
        out = capsys.readouterr()
        assert out.out == ""

    def test_diagnostics_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.fst"
        bad.write_text("main : Int\nmain = 1 + True\n")
        assert main(["check", str(bad)]) == 1
        err = capsys.readouterr().err
        assert "bad.fst:" in err and "error" in err

    def test_unreadable_file(self, capsys):
        assert main(["check", "/no/such/file.fst"]) == 1
        assert "error" in capsys.readouterr().err


class TestRun:
    def test_run_prints_value(self, capsys):
        assert main(["run", CROSS, "--seed", "1"]) == 0
        assert capsys.readouterr().out.strip() == "False"

    def test_tree_output(self, capsys):
        assert main(["run", TREE, "--seed", "1"]) == 0
        out = capsys.readouterr().out.strip()
        assert out.startswith("Node 36 ")

    def test_deadlock_exit_3(self, capsys):
        assert main(["run", DOUBLED, "--seed", "1", "--quiescence", "0.15"]) == 3
        assert "deadlock" in capsys.readouterr().err


class TestEquiv:
    def test_equivalent(self, capsys):
        assert main(["equiv", "Skip;!Int", "!Int"]) == 0
        assert capsys.readouterr().out.strip() == "equivalent"

    def test_not_equivalent(self, capsys):
        assert main(["equiv", "!Int", "?Int"]) == 1
        assert capsys.readouterr().out.strip() == "not equivalent"

    def test_inconclusive_exit_2(self, capsys):
        t1 = "rec x. +{A: !Int;x;x, B: Skip}"
        t2 = "rec y. +{A: !Int;y;y;Skip, B: Skip}"
        assert main(["equiv", t1, t2, "--budget", "0"]) == 2
        assert capsys.readouterr().out.strip() == "inconclusive"

    def test_trace_lines(self, capsys):
        assert main(["equiv", "--trace", "!Int;?Bool", "!Int;?Bool"]) == 0
        out = capsys.readouterr().out
        assert "node depth=" in out and out.strip().endswith("equivalent")

    def test_bad_type_is_a_diagnostic(self, capsys):
        assert main(["equiv", "+{}", "!Int"]) == 1
        assert "empty choice" in capsys.readouterr().err


class TestDumps:
    def test_dual(self, capsys):
        assert main(["dual", "rec x. +{Leaf: Skip, Node: !Int;x;x;?Int}"]) == 0
        assert capsys.readouterr().out.strip() == "rec x. &{Leaf: Skip, Node: ?Int;x;x;!Int}"

    def test_dual_rejects_functional(self, capsys):
        assert main(["dual", "Int -> Bool"]) == 1

    def test_dump_grammar(self, capsys):
        assert main(["dump-grammar", "rec x. !Int;x"]) == 0
        out = capsys.readouterr().out
        assert "X0 -> !Int X0" in out
        assert "norm(X0) = inf" in out

    def test_dump_grammar_norms(self, capsys):
        assert main(["dump-grammar", "!Int;?Bool"]) == 0
        out = capsys.readouterr().out
        assert "norm(X0) = 1" in out and "norm(X1) = 1" in out

    def test_dump_grammar_tree_channel_golden(self, capsys):
        assert main(["dump-grammar", "rec x. +{Leaf: Skip, Node: !Int;x;x;?Int}"]) == 0
        assert capsys.readouterr().out == (
            "start0 = X0\n"
            "X0 -> +Leaf\n"
            "X0 -> +Node X1 X0 X0 X2\n"
            "X1 -> !Int\n"
            "X2 -> ?Int\n"
            "norm(X0) = 1\n"
            "norm(X1) = 1\n"
            "norm(X2) = 1\n")

    def test_dump_types(self, capsys):
        assert main(["dump-types", TREE]) == 0
        out = capsys.readouterr().out
        assert "treeSum : forall alpha:SL => " in out


class TestUsage:
    def test_unknown_command_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 64

    def test_missing_argument_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["equiv", "!Int"])
        assert exc.value.code == 64
