"""Shared builders: compact score construction and a deterministic corpus."""

from __future__ import annotations

import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from iscore.compiler import CompiledScore, compile_score
from iscore.model import (
    INF,
    Behavior,
    ControlPoint,
    IntervalSpec,
    Kind,
    PointKind,
    Q,
    Role,
    Score,
    TemporalObject,
    validate,
)

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def interval(lo: Q, nominal: Q, hi: Q) -> IntervalSpec:
    return IntervalSpec(Fraction(lo), Fraction(nominal), INF if hi == INF else Fraction(hi))


def tex(
    tid: str,
    start: Q,
    end: Q,
    *,
    dyn_start: bool = False,
    dyn_end: bool = False,
    lo: Q = 0,
    hi: Q = INF,
    process: str = "sound",
) -> TemporalObject:
    start, end = Fraction(start), Fraction(end)
    return TemporalObject(
        id=tid,
        kind=Kind.TEXTURE,
        duration=interval(lo, end - start, hi),
        points=(
            ControlPoint(f"{tid}.s", tid, Role.START,
                         PointKind.DYNAMIC if dyn_start else PointKind.STATIC, start),
            ControlPoint(f"{tid}.e", tid, Role.END,
                         PointKind.DYNAMIC if dyn_end else PointKind.STATIC, end),
        ),
        process=process,
    )


def struct(
    sid: str,
    behavior: Behavior,
    children: tuple[TemporalObject, ...],
    *,
    start: Q = 0,
    nominal: Q,
    lo: Q = 0,
    hi: Q = INF,
    relations=(),
) -> TemporalObject:
    start = Fraction(start)
    if behavior is Behavior.PROPORTIONAL:
        lo = hi = nominal
    return TemporalObject(
        id=sid,
        kind=Kind.STRUCTURE,
        duration=interval(lo, nominal, hi),
        points=(
            ControlPoint(f"{sid}.s", sid, Role.START, PointKind.STATIC, start),
            ControlPoint(f"{sid}.e", sid, Role.END, PointKind.STATIC, start + Fraction(nominal)),
        ),
        behavior=behavior,
        children=children,
        relations=tuple(relations),
    )


def score_of(root: TemporalObject, **kw) -> Score:
    s = Score(version="1", root=root, **kw)
    assert validate(s) == [], validate(s)
    return s


BEHAVIORS = (
    Behavior.FERMATA,
    Behavior.CHRONOLOGICAL,
    Behavior.ANTICHRONOLOGICAL,
    Behavior.PROPORTIONAL,
)


def corpus_score(behavior: Behavior, shape: int) -> Score:
    """Deterministic small scores: 5 shapes x 4 behaviors, all with one
    dynamic start point and integer bounds <= 10."""
    b = behavior
    if shape == 0:  # one texture, unbounded parent (rigid if proportional)
        root = struct("S", b, (tex("T", 2, 6, dyn_start=True),), nominal=10)
    elif shape == 1:  # one texture, bounded parent
        root = struct("S", b, (tex("T", 2, 6, dyn_start=True),), nominal=8, hi=10)
    elif shape == 2:  # two sequential textures
        root = struct(
            "S", b,
            (tex("A", 1, 3, dyn_start=True), tex("B", 5, 8, lo=1, hi=9)),
            nominal=10, hi=10,
        )
    elif shape == 3:  # three textures, tight bounds
        root = struct(
            "S", b,
            (
                tex("A", 1, 3, dyn_start=True, lo=1, hi=5),
                tex("B", 4, 6, lo=0, hi=8),
                tex("C", 7, 9, lo=1, hi=4),
            ),
            nominal=10, hi=10,
        )
    else:  # nested structure
        inner_b = b if b is not Behavior.PROPORTIONAL else Behavior.PROPORTIONAL
        inner = struct(
            "M", inner_b, (tex("T", 1, 4, dyn_start=True),), start=2, nominal=6,
            hi=6 if inner_b is Behavior.PROPORTIONAL else 8,
        )
        root = struct("S", b, (inner,), nominal=10, hi=10)
    return score_of(root)


def corpus() -> list[tuple[str, Score]]:
    out = []
    for b in BEHAVIORS:
        for shape in range(5):
            out.append((f"{b.value}-{shape}", corpus_score(b, shape)))
    return out


def random_score(rng: random.Random) -> Score:
    """A small random flat score with integer bounds <= 10 and a dynamic
    first start point."""
    n = rng.randint(2, 4)
    b = rng.choice(BEHAVIORS[:3])  # proportional needs a rigid parent; varied separately
    children = []
    cursor = rng.randint(0, 2)
    for i in range(n):
        length = rng.randint(1, 3)
        lo = rng.randint(0, length)
        hi = rng.choice([INF, length + rng.randint(0, 4)])
        children.append(
            tex(f"t{i}", cursor, cursor + length, dyn_start=(i == 0), lo=lo, hi=hi)
        )
        cursor += length + rng.randint(0, 2)
    nominal = cursor + rng.randint(0, 2)
    hi = rng.choice([INF, nominal + rng.randint(0, 5)])
    return score_of(struct("S", b, tuple(children), nominal=nominal, hi=hi))


@pytest.fixture(scope="session")
def fixture_a() -> Score:
    from iscore import parse_score

    return parse_score((FIXTURES / "nested_basic.json").read_text())


@pytest.fixture(scope="session")
def fixture_a_compiled(fixture_a) -> CompiledScore:
    return compile_score(fixture_a)


def fixture_a_variant(behavior: str, dmax: Q) -> Score:
    from iscore import parse_score

    doc = json.loads((FIXTURES / "nested_basic.json").read_text())
    doc["root"]["behavior"] = behavior
    doc["root"]["duration"]["max"] = dmax if dmax == "inf" else int(dmax)
    if behavior == "proportional":
        doc["root"]["duration"]["min"] = int(dmax)
    return parse_score(json.dumps(doc))


@pytest.fixture(scope="session")
def branching_score() -> Score:
    from iscore import parse_score

    return parse_score((FIXTURES / "branching_loop.json").read_text())
