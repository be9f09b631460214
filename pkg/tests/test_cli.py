"""Command line front end."""

import json

from click.testing import CliRunner

from iscore import serialize_score
from iscore.cli import main
from conftest import FIXTURES, GOLDEN, fixture_a_variant

NESTED = str(FIXTURES / "nested_basic.json")
LOOP = str(FIXTURES / "branching_loop.json")


def invoke(*args, **kw):
    return CliRunner().invoke(main, list(args), **kw)


class TestValidate:
    def test_valid_score(self):
        result = invoke("validate", NESTED)
        assert result.exit_code == 0
        assert result.output.strip() == "ok"

    def test_invalid_score(self, tmp_path):
        doc = json.loads(open(NESTED).read())
        doc["root"]["duration"]["min"] = "20"  # exceeds the written maximum
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        result = invoke("validate", str(bad))
        assert result.exit_code == 1
        assert result.output.strip()


class TestCompile:
    def test_default_stage_prints_constraints(self):
        result = invoke("compile", NESTED)
        assert result.exit_code == 0
        assert "d:S" in result.output

    def test_petri_stage_reports_flat_counts(self):
        result = invoke("compile", NESTED, "--emit", "petri")
        assert result.exit_code == 0
        assert "flat transitions=4 places=3" in result.output


class TestRun:
    def test_timed_net_with_script_matches_golden(self, tmp_path):
        script = tmp_path / "script.json"
        script.write_text(json.dumps([{"at": "5", "trigger": "startT"}]))
        out = tmp_path / "trace.txt"
        result = invoke(
            "run", NESTED, "--engine", "petri",
            "--script", str(script), "--trace", str(out),
        )
        assert result.exit_code == 0
        assert out.read_text() == (GOLDEN / "petri_fermata_trigger5.txt").read_text()

    def test_stalled_run_exits_incomplete(self):
        result = invoke("run", NESTED, "--engine", "petri")
        assert result.exit_code == 2
        assert "incomplete" in result.output

    def test_branching_run_with_user_script(self, tmp_path):
        script = tmp_path / "script.json"
        script.write_text(json.dumps([{"from_tick": 30, "set": {"finish": True}}]))
        result = invoke("run", LOOP, "--script", str(script))
        assert result.exit_code == 0
        assert result.output == (GOLDEN / "branch_finish30.txt").read_text()


class TestWindow:
    def test_dynamic_point(self):
        result = invoke("window", NESTED, "--point", "startT")
        assert result.exit_code == 0
        assert result.output.strip() == "earliest=0 latest=inf"

    def test_static_point(self):
        result = invoke("window", NESTED, "--point", "endT")
        assert result.exit_code == 0
        assert result.output.strip() == "earliest=6 latest=6"

    def test_unknown_point(self):
        result = invoke("window", NESTED, "--point", "ghost")
        assert result.exit_code != 0


class TestOracle:
    def test_enumerate_counts_grid_solutions(self, tmp_path):
        f = tmp_path / "rigid.json"
        f.write_text(serialize_score(fixture_a_variant("proportional", 10)))
        result = invoke("oracle", str(f), "--enumerate", "--step", "1", "--cap", "10")
        assert result.exit_code == 0
        assert result.output.strip() == "solutions=66"

    def test_point_window(self, tmp_path):
        f = tmp_path / "chrono.json"
        f.write_text(serialize_score(fixture_a_variant("chronological", 12)))
        result = invoke("oracle", str(f), "--point", "startT", "--cap", "16")
        assert result.exit_code == 0
        assert result.output.strip() == "earliest=0 latest=12"

    def test_requires_a_mode(self):
        result = invoke("oracle", NESTED)
        assert result.exit_code != 0


class TestBench:
    def test_small_run_prints_report(self):
        result = invoke("bench", "--objects", "20", "--trials", "5")
        assert result.exit_code == 0
        assert "median" in result.output
