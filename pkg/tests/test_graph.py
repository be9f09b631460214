"""Event-graph construction and zero-delay reduction."""

import json
from fractions import Fraction

import pytest

from iscore.graph import build_event_graph, duration_var, reduce_zero_delays
from iscore.model import INF, Behavior, CompileError, parse_score
from conftest import FIXTURES, score_of, struct, tex


class TestBuild:
    def test_fixture_is_a_path(self, fixture_a):
        g = build_event_graph(fixture_a.root)
        assert (g.alpha, g.beta) == ("startS", "endS")
        assert sorted(g.vertices) == ["endS", "endT", "startS", "startT"]
        by_id = {a.id: a for a in g.arcs}
        assert by_id["startS->startT"].bounds.nominal == 2
        assert by_id[duration_var("T")].bounds.nominal == 4
        assert by_id["endT->endS"].bounds.nominal == 4
        # implicit precedence arcs are supple
        assert by_id["startS->startT"].bounds.supple
        assert by_id["endT->endS"].bounds.supple

    def test_topological_order_starts_at_alpha(self, fixture_a):
        g = build_event_graph(fixture_a.root)
        order = g.topological_order()
        assert order[0] == g.alpha and order[-1] == g.beta

    def test_dynamic_vertex_flag(self, fixture_a):
        g = build_event_graph(fixture_a.root)
        assert g.vertices["startT"].dynamic
        assert not g.vertices["startS"].dynamic

    def test_child_duration_variable_is_shared(self):
        inner = struct("M", Behavior.FERMATA, (tex("T", 1, 4),), start=2, nominal=6)
        score = score_of(struct("S", Behavior.FERMATA, (inner,), nominal=10))
        outer = build_event_graph(score.root)
        assert any(a.id == duration_var("M") for a in outer.arcs)
        inner_g = build_event_graph(inner)
        assert any(a.id == duration_var("T") for a in inner_g.arcs)

    def test_explicit_relation_becomes_arc(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["relations"] = [
            {"type": "pre", "from": "startT", "to": "endS", "min": 1, "max": 9}
        ]
        g = build_event_graph(parse_score(json.dumps(doc)).root)
        arc = next(a for a in g.arcs if a.src == "startT" and a.dst == "endS")
        assert (arc.bounds.lo, arc.bounds.hi) == (1, 9)
        assert arc.bounds.nominal == 8  # written date difference

    def test_contradictory_relations_raise(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["relations"] = [
            {"type": "pre", "from": "endT", "to": "startT", "min": 0, "max": "inf"}
        ]
        score = parse_score(json.dumps(doc))
        with pytest.raises(CompileError, match="cycle"):
            build_event_graph(score.root)

    def test_empty_structure_gets_duration_arc(self):
        score = score_of(struct("S", Behavior.FERMATA, (), nominal=5))
        g = build_event_graph(score.root)
        assert len(g.arcs) == 1
        assert g.arcs[0].bounds.nominal == 5

    def test_internal_point_hooked_to_terminals(self):
        from iscore.model import ControlPoint, PointKind, Role
        from dataclasses import replace

        root = struct("S", Behavior.FERMATA, (tex("T", 2, 6),), nominal=10)
        mid = ControlPoint("mid", "S", Role.INTERNAL, PointKind.STATIC, Fraction(7), "cue")
        root = replace(root, points=root.points + (mid,))
        g = build_event_graph(root)
        assert any(a.src == g.alpha and a.dst == "mid" for a in g.arcs)
        assert any(a.src == "mid" and a.dst == g.beta for a in g.arcs)
        arc = next(a for a in g.arcs if a.dst == "mid")
        assert arc.bounds.nominal == 7


class TestZeroDelayReduction:
    def _with_zero_gap(self):
        # T starts exactly with S: the implicit arc is [0,0]/0 after tightening
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["children"][0]["points"][0]["date"] = 0
        doc["root"]["children"][0]["points"][1]["date"] = 4
        doc["root"]["relations"] = [
            {"type": "pre", "from": "startS", "to": "startT", "min": 0, "max": 0}
        ]
        return parse_score(json.dumps(doc))

    def test_merge_keeps_labels(self):
        score = self._with_zero_gap()
        g = reduce_zero_delays(build_event_graph(score.root))
        assert "startS" not in g.vertices
        merged = g.vertices["startT"]
        assert {pid for pid, _, _ in merged.labels} == {"startS", "startT"}
        assert g.alpha == "startT"

    def test_no_zero_arcs_remain(self):
        score = self._with_zero_gap()
        g = reduce_zero_delays(build_event_graph(score.root))
        for a in g.arcs:
            assert not (a.bounds.lo == 0 and a.bounds.hi == 0 and a.bounds.nominal == 0)

    def test_reduction_without_zero_arcs_is_identity(self, fixture_a):
        g = build_event_graph(fixture_a.root)
        assert reduce_zero_delays(g) == g
