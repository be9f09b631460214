"""Score document parsing, validation and canonicalization."""

import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from iscore.model import (
    INF,
    Behavior,
    IntervalSpec,
    ParseError,
    RelType,
    TemporalRelation,
    canonicalize_relations,
    dump_q,
    parse_q,
    parse_q_or_inf,
    parse_score,
    point_offset,
    serialize_score,
    validate,
)
from conftest import FIXTURES, score_of, struct, tex


class TestRationals:
    def test_int_and_fraction_strings(self):
        assert parse_q(3, "x") == Fraction(3)
        assert parse_q("7/2", "x") == Fraction(7, 2)
        assert parse_q_or_inf("inf", "x") == INF

    def test_bad_rational(self):
        with pytest.raises(ParseError):
            parse_q("three", "x")
        with pytest.raises(ParseError):
            parse_q(True, "x")
        with pytest.raises(ParseError):
            parse_q("1/0", "x")

    @given(st.fractions(min_value=0, max_value=1000))
    def test_dump_parse_round_trip(self, q):
        assert parse_q(dump_q(q), "x") == q


class TestParsing:
    def test_fixture_round_trip(self, fixture_a):
        again = parse_score(serialize_score(fixture_a))
        assert again == fixture_a

    def test_fixture_shape(self, fixture_a):
        objs = fixture_a.objects()
        assert set(objs) == {"S", "T"}
        assert len(fixture_a.points()) == 4
        assert objs["S"].duration.nominal == 10
        assert objs["T"].duration.nominal == 4

    def test_unknown_field_rejected(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["tempo"] = 120
        with pytest.raises(ParseError, match="unknown field"):
            parse_score(json.dumps(doc))

    def test_duplicate_id_rejected(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["children"][0]["id"] = "S"
        with pytest.raises(ParseError, match="duplicate id"):
            parse_score(json.dumps(doc))

    def test_dangling_relation_reference(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["relations"] = [
            {"type": "pre", "from": "startS", "to": "ghost", "min": 0, "max": "inf"}
        ]
        with pytest.raises(ParseError, match="ghost"):
            parse_score(json.dumps(doc))

    def test_syntax_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_score('{"version": "1",\n  "root": }')
        assert err.value.line == 2

    def test_branching_parsed(self, branching_score):
        assert branching_score.branching is not None
        assert len(branching_score.branching.intervals) == 9
        assert branching_score.variables == ("finish",)


class TestIntervalSpec:
    def test_supple_and_rigid(self):
        assert IntervalSpec(Fraction(0), Fraction(5), INF).supple
        assert IntervalSpec(Fraction(5), Fraction(5), Fraction(5)).rigid
        assert not IntervalSpec(Fraction(1), Fraction(5), INF).supple


class TestValidation:
    def test_fixture_is_clean(self, fixture_a):
        assert validate(fixture_a) == []

    def test_proportional_requires_rigid(self):
        from dataclasses import replace

        from iscore.model import Score

        root = struct("S", Behavior.PROPORTIONAL, (tex("T", 2, 6),), nominal=10)
        # defeat the builder's auto-rigidity
        root = replace(root, duration=IntervalSpec(Fraction(8), Fraction(10), Fraction(12)))
        codes = [v.code for v in validate(Score(version="1", root=root))]
        assert "proportional-not-rigid" in codes

    def test_relation_min_exceeds_max(self, fixture_a):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["relations"] = [
            {"type": "pre", "from": "startS", "to": "startT", "min": 5, "max": 3}
        ]
        codes = [v.code for v in validate(parse_score(json.dumps(doc)))]
        assert "min-exceeds-max" in codes

    def test_written_dates_must_satisfy_relations(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["relations"] = [
            {"type": "pre", "from": "startS", "to": "startT", "min": 5, "max": 9}
        ]
        codes = [v.code for v in validate(parse_score(json.dumps(doc)))]
        assert "dates-violate-relation" in codes  # written gap is 2

    def test_nominal_date_mismatch(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["children"][0]["duration"]["nominal"] = 5
        codes = [v.code for v in validate(parse_score(json.dumps(doc)))]
        assert "nominal-date-mismatch" in codes

    def test_infinity_cap_must_cover_finite_bounds(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["infinity_cap"] = 3
        codes = [v.code for v in validate(parse_score(json.dumps(doc)))]
        assert "cap-too-small" in codes

    def test_undeclared_condition_variable(self):
        doc = json.loads((FIXTURES / "branching_loop.json").read_text())
        doc["variables"] = []
        codes = [v.code for v in validate(parse_score(json.dumps(doc)))]
        assert "undeclared-variable" in codes

    def test_duplicate_branch_interval_pair(self):
        doc = json.loads((FIXTURES / "branching_loop.json").read_text())
        extra = dict(doc["branching"]["intervals"][0])
        extra["id"] = "silence1b"
        doc["branching"]["intervals"].append(extra)
        codes = [v.code for v in validate(parse_score(json.dumps(doc)))]
        assert "duplicate-interval" in codes


class TestPointOffset:
    def test_child_points_in_structure_referential(self, fixture_a):
        s = fixture_a.root
        t = s.children[0]
        assert point_offset(s, t.start) == 2
        assert point_offset(s, t.end) == 6
        assert point_offset(s, s.start) == 0
        assert point_offset(s, s.end) == 10


class TestCanonicalization:
    def _with_post(self):
        doc = json.loads((FIXTURES / "nested_basic.json").read_text())
        doc["root"]["relations"] = [
            {"type": "post", "from": "startT", "to": "startS", "min": 1, "max": 4}
        ]
        return parse_score(json.dumps(doc))

    def test_post_becomes_symmetric_pre(self):
        score = canonicalize_relations(self._with_post())
        (rel,) = score.root.relations
        assert rel == TemporalRelation(RelType.PRE, "startS", "startT", Fraction(1), Fraction(4))

    def test_idempotent(self):
        once = canonicalize_relations(self._with_post())
        assert canonicalize_relations(once) == once

    def test_validation_unchanged(self):
        score = self._with_post()
        assert [v.code for v in validate(score)] == [
            v.code for v in validate(canonicalize_relations(score))
        ]
