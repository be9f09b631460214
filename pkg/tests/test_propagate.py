"""Perturbation spreading: behavior rules, windows, oracle equivalence."""

import random
from fractions import Fraction

import pytest

from iscore.compiler import compile_score
from iscore.model import INF, Behavior
from iscore.oracle import brute_force_window, check_assignment
from iscore.propagate import (
    InfeasibleDelta,
    Window,
    WindowRefused,
    execute_plan,
    feasible_window_from_plan,
)
from iscore.vm import nominal_state
from conftest import BEHAVIORS, corpus, fixture_a_variant, random_score


def fixture_compiled(behavior: str, dmax) -> tuple:
    compiled = compile_score(fixture_a_variant(behavior, dmax))
    return compiled, nominal_state(compiled), compiled.plans["startT"]


def run_trigger(behavior: str, dmax, observed, **kw):
    compiled, state, plan = fixture_compiled(behavior, dmax)
    res = execute_plan(plan, state, Fraction(observed), compiled.constraints.variables, **kw)
    v = res.new_values
    return compiled, res, (v["startS->startT"], v["d:T"], v["endT->endS"], v["d:S"])


class TestBehaviorExamples:
    def test_fermata_delay_shifts_and_grows_parent(self):
        compiled, res, vals = run_trigger("fermata", "inf", 5)
        assert vals == (5, 4, 4, 13)
        assert not res.clamped
        assert res.shifted_dates["endS"] == 13

    def test_chronological_full_saturation(self):
        compiled, res, vals = run_trigger("chronological", "inf", 11)
        assert vals == (11, 0, 0, 11)

    def test_chronological_partial(self):
        compiled, res, vals = run_trigger("chronological", 12, 5)
        assert vals == (5, 1, 4, 10)

    def test_antichronological_parent_first(self):
        compiled, res, vals = run_trigger("antichronological", 12, 5)
        assert vals == (5, 4, 3, 12)

    def test_proportional_common_factor(self):
        compiled, res, vals = run_trigger("proportional", 10, 5)
        assert vals == (5, Fraction(5, 2), Fraction(5, 2), 10)
        # both scaled by the same factor 5/8
        assert vals[1] / 4 == vals[2] / 4 == Fraction(5, 8)

    def test_identity_at_written_date(self):
        for b in ("fermata", "chronological", "antichronological", "proportional"):
            dmax = 10 if b == "proportional" else "inf"
            compiled, res, vals = run_trigger(b, dmax, 2)
            assert vals == (2, 4, 4, 10), b
            assert res.shifted_dates["endS"] == 10

    def test_early_trigger_is_symmetric(self):
        # chronological early: later intervals grow instead of shrinking
        compiled, res, vals = run_trigger("chronological", 12, 1)
        assert vals[0] == 1
        assert vals[3] == sum(vals[:3])
        assert vals[1] >= 4  # grew

    def test_fermata_leaves_untouched_intervals(self):
        compiled, res, vals = run_trigger("fermata", "inf", 7)
        assert (vals[1], vals[2]) == (4, 4)

    def test_clamped_auto_fire(self):
        compiled, state, plan = fixture_compiled("chronological", 12)
        res = execute_plan(
            plan, state, Fraction(12), compiled.constraints.variables, check_window=False
        )
        v = res.new_values
        assert (v["startS->startT"], v["d:T"], v["endT->endS"]) == (12, 0, 0)

    def test_strict_mode_raises_past_capacity(self):
        compiled, state, plan = fixture_compiled("chronological", 12)
        with pytest.raises((InfeasibleDelta, WindowRefused)):
            execute_plan(
                plan, state, Fraction(13), compiled.constraints.variables,
                strict=True,
            )

    def test_fixed_variables_untouched(self):
        compiled, state, plan = fixture_compiled("chronological", 12)
        state.fixed.add("d:T")
        res = execute_plan(plan, state, Fraction(5), compiled.constraints.variables)
        assert res.new_values["d:T"] == 4
        assert res.new_values["endT->endS"] == 1  # absorbed instead


class TestWindows:
    def test_chronological_window(self):
        compiled, state, plan = fixture_compiled("chronological", 12)
        w = feasible_window_from_plan(plan, state, compiled.constraints.variables)
        assert w == Window(Fraction(0), Fraction(12))

    def test_unbounded_fermata_window(self):
        compiled, state, plan = fixture_compiled("fermata", "inf")
        w = feasible_window_from_plan(plan, state, compiled.constraints.variables)
        assert (w.earliest, w.latest) == (0, INF)

    def test_refusal_outside_window(self):
        compiled, state, plan = fixture_compiled("chronological", 12)
        with pytest.raises(WindowRefused):
            execute_plan(plan, state, Fraction(13), compiled.constraints.variables)

    def test_window_equivalence_on_corpus(self):
        for name, score in corpus():
            compiled = compile_score(score)
            state = nominal_state(compiled)
            for point, plan in compiled.plans.items():
                analytic = feasible_window_from_plan(
                    plan, state, compiled.constraints.variables
                )
                brute = brute_force_window(compiled, point, state, step=1, scan_cap=16)
                assert analytic.earliest == brute.earliest, (name, point)
                assert analytic.latest == brute.latest, (name, point)


class TestOracleEquivalence:
    DELTAS = (Fraction(-2), Fraction(0), Fraction(1), Fraction(3), None)  # None = saturation

    def test_propagation_results_satisfy_constraints(self):
        checked = 0
        for name, score in corpus():
            compiled = compile_score(score)
            variables = compiled.constraints.variables
            for point, plan in compiled.plans.items():
                state = nominal_state(compiled)
                expected = state.times[plan.anchor] + state.values[plan.changed]
                window = feasible_window_from_plan(plan, state, variables)
                for delta in self.DELTAS:
                    if delta is None:
                        if window.latest == INF:
                            continue
                        observed = Fraction(window.latest)
                    else:
                        observed = expected + delta
                        if not window.contains(observed):
                            continue
                    res = execute_plan(plan, state, observed, variables)
                    assert check_assignment(res.new_values, compiled.constraints), (
                        name, point, delta,
                    )
                    checked += 1
        assert checked >= 60

    def test_saturation_equalizes_chrono_and_anti(self):
        rng = random.Random(20260824)
        produced = 0
        while produced < 50:
            score = random_score(rng)
            if score.root.behavior not in (
                Behavior.CHRONOLOGICAL,
                Behavior.ANTICHRONOLOGICAL,
            ):
                continue
            from dataclasses import replace

            results = {}
            for b in (Behavior.CHRONOLOGICAL, Behavior.ANTICHRONOLOGICAL):
                variant = replace(score, root=replace(score.root, behavior=b))
                compiled = compile_score(variant)
                state = nominal_state(compiled)
                point = sorted(compiled.plans)[0]
                plan = compiled.plans[point]
                window = feasible_window_from_plan(
                    plan, state, compiled.constraints.variables
                )
                if window.latest == INF:
                    results = None
                    break
                res = execute_plan(
                    plan, state, Fraction(window.latest),
                    compiled.constraints.variables,
                )
                results[b] = res.new_values
            if results is None:
                continue
            a, b = results.values()
            assert a == b
            produced += 1

    def test_proportional_preserves_rigid_parent(self):
        for shape in range(5):
            from conftest import corpus_score

            score = corpus_score(Behavior.PROPORTIONAL, shape)
            compiled = compile_score(score)
            state = nominal_state(compiled)
            for point, plan in compiled.plans.items():
                window = feasible_window_from_plan(
                    plan, state, compiled.constraints.variables
                )
                top = plan.levels[-1]
                for observed in (window.earliest, window.latest):
                    if observed == INF:
                        continue
                    res = execute_plan(
                        plan, state, Fraction(observed), compiled.constraints.variables
                    )
                    left = top.equality.left
                    assert res.new_values[left] == state.values[left], (shape, point)
