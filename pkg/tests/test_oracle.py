"""Independent oracles: grid enumeration, recursive recognition, replay."""

from dataclasses import replace
from fractions import Fraction

from iscore.branching import BranchEngine, UserScript
from iscore.compiler import compile_score
from iscore.graph import Arc
from iscore.model import IntervalSpec
from iscore.oracle import (
    check_assignment,
    enumerate_assignments,
    is_series_parallel,
    simulate_branching,
)
from iscore.propagate import Window, feasible_window
from iscore.trace import render_trace
from iscore.vm import nominal_state
from conftest import fixture_a_variant


def q(n) -> Fraction:
    return Fraction(n)


def arc(src, dst, n=0) -> Arc:
    spec = IntervalSpec(Fraction(0), Fraction(n), Fraction(10))
    return Arc(id=f"{src}->{dst}", src=src, dst=dst, bounds=spec)


class TestAssignmentChecking:
    def test_written_values_pass(self, fixture_a_compiled):
        values = {"startS->startT": q(2), "d:T": q(4), "endT->endS": q(4), "d:S": q(10)}
        assert check_assignment(values, fixture_a_compiled.constraints)

    def test_sum_mismatch_fails(self, fixture_a_compiled):
        values = {"startS->startT": q(5), "d:T": q(4), "endT->endS": q(4), "d:S": q(10)}
        assert not check_assignment(values, fixture_a_compiled.constraints)

    def test_bound_violation_fails(self):
        compiled = compile_score(fixture_a_variant("chronological", 12))
        values = {"startS->startT": q(5), "d:T": q(4), "endT->endS": q(4), "d:S": q(13)}
        assert not check_assignment(values, compiled.constraints)

    def test_empty_assignment_passes(self, fixture_a_compiled):
        assert check_assignment({}, fixture_a_compiled.constraints)


class TestEnumeration:
    def test_rigid_parent_count_matches_closed_form(self):
        compiled = compile_score(fixture_a_variant("proportional", 10))
        found = enumerate_assignments(compiled.constraints, step=1, cap=10)
        # three nonnegative integers summing to the rigid 10: C(12, 2)
        assert len(found) == 66
        for a in found:
            assert sum((a["startS->startT"], a["d:T"], a["endT->endS"])) == 10

    def test_unsatisfiable_is_empty(self):
        compiled = compile_score(fixture_a_variant("proportional", 10))
        cg = compiled.constraints
        tight = dict(cg.variables)
        tight["d:T"] = replace(tight["d:T"], lo=q(11), hi=q(12), nominal=q(11))
        assert enumerate_assignments(replace(cg, variables=tight), step=1, cap=15) == []

    def test_coarse_grid_is_subset_of_fine(self):
        compiled = compile_score(fixture_a_variant("proportional", 10))
        fine = enumerate_assignments(compiled.constraints, step=1, cap=10)
        coarse = enumerate_assignments(compiled.constraints, step=2, cap=10)
        assert 0 < len(coarse) < len(fine)
        assert all(a in fine for a in coarse)


class TestRecursiveRecognition:
    def test_path_and_diamond_are_series_parallel(self):
        path = [arc("s", "a"), arc("a", "t")]
        diamond = [arc("s", "a"), arc("s", "b"), arc("a", "t"), arc("b", "t")]
        assert is_series_parallel(path, "s", "t")
        assert is_series_parallel(diamond, "s", "t")

    def test_cross_arc_breaks_the_property(self):
        n_shape = [
            arc("s", "a"), arc("s", "b"), arc("a", "b"), arc("a", "t"), arc("b", "t"),
        ]
        assert not is_series_parallel(n_shape, "s", "t")


class TestWindowsDegenerate:
    def test_static_point_window_is_its_date(self, fixture_a_compiled):
        state = nominal_state(fixture_a_compiled)
        w = feasible_window("endT", state, None, static_date=state.times["endT"])
        assert w == Window(q(6), q(6))


class TestReplaySimulator:
    def scripts(self):
        yield None
        for tick in (0, 30):
            yield UserScript.from_json([{"from_tick": tick, "set": {"finish": True}}])

    def test_matches_engine_on_loop_fixture(self, branching_score):
        for script in self.scripts():
            engine_trace, engine_done = BranchEngine(branching_score).run(
                script, max_ticks=60
            )
            oracle_trace, oracle_done = simulate_branching(
                branching_score, script, max_ticks=60
            )
            assert engine_done == oracle_done
            assert render_trace(engine_trace) == render_trace(oracle_trace)
