"""Score document model: temporal objects, control points, relations, branching.

All durations and dates are exact non-negative rationals measured in ticks.
The tick length in milliseconds is a runtime parameter, never part of the
model.  Unbounded maxima are represented by ``math.inf`` (which compares and
adds cleanly with :class:`fractions.Fraction`) and are finitized with the
score's ``infinity_cap`` only at engine boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Iterator

INF = math.inf

#: A tick quantity: exact rational, or ``INF`` for an unbounded maximum.
Q = Fraction | float


class ScoreError(Exception):
    """Base class for score document errors."""


class ParseError(ScoreError):
    """Malformed score document (syntax, unknown field, dangling reference)."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class CompileError(ScoreError):
    """Score cannot be compiled (e.g. contradictory relations form a cycle)."""


@dataclass(frozen=True)
class Violation:
    """A single validation failure; violations are data, not exceptions."""

    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}[{self.subject}]: {self.message}"


class Kind(str, Enum):
    TEXTURE = "texture"
    STRUCTURE = "structure"


class Role(str, Enum):
    START = "start"
    END = "end"
    INTERNAL = "internal"


class PointKind(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class Behavior(str, Enum):
    FERMATA = "fermata"
    CHRONOLOGICAL = "chronological"
    ANTICHRONOLOGICAL = "antichronological"
    PROPORTIONAL = "proportional"


class RelType(str, Enum):
    PRE = "pre"
    POST = "post"


class Wait(str, Enum):
    ALL = "all"
    FIRST = "first"


class Choose(str, Enum):
    ONE = "one"
    ALL = "all"


class Interp(str, Enum):
    WHEN = "when"
    UNLESS = "unless"


@dataclass(frozen=True)
class IntervalSpec:
    """Duration bounds [lo, hi] with a written nominal value, lo <= nominal <= hi."""

    lo: Fraction
    nominal: Fraction
    hi: Q

    @property
    def supple(self) -> bool:
        return self.lo == 0 and self.hi == INF

    @property
    def rigid(self) -> bool:
        return self.hi != INF and self.lo == self.hi

    @staticmethod
    def exact(value: Q) -> "IntervalSpec":
        v = Fraction(value)
        return IntervalSpec(v, v, v)

    @staticmethod
    def supple_of(nominal: Q) -> "IntervalSpec":
        return IntervalSpec(Fraction(0), Fraction(nominal), INF)


@dataclass(frozen=True)
class ControlPoint:
    id: str
    owner: str
    role: Role
    kind: PointKind
    date: Fraction  # in the owner's parent structure's time referential
    step: str = ""


@dataclass(frozen=True)
class TemporalRelation:
    rel_type: RelType
    src: str  # point id ("from")
    dst: str  # point id ("to")
    lo: Fraction
    hi: Q


@dataclass(frozen=True)
class TemporalObject:
    id: str
    kind: Kind
    duration: IntervalSpec
    points: tuple[ControlPoint, ...]
    process: str | None = None  # textures only
    behavior: Behavior | None = None  # structures only
    children: tuple["TemporalObject", ...] = ()
    relations: tuple[TemporalRelation, ...] = ()

    @property
    def start(self) -> ControlPoint:
        return next(p for p in self.points if p.role is Role.START)

    @property
    def end(self) -> ControlPoint:
        return next(p for p in self.points if p.role is Role.END)

    def walk(self) -> Iterator["TemporalObject"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class BranchPoint:
    id: str
    wait: Wait = Wait.FIRST
    choose: Choose = Choose.ALL


@dataclass(frozen=True)
class BranchInterval:
    id: str
    src: str
    dst: str
    condition: str
    interpretation: Interp
    duration: IntervalSpec
    process: str = ""


@dataclass(frozen=True)
class BranchSpec:
    points: tuple[BranchPoint, ...]
    intervals: tuple[BranchInterval, ...]

    def point(self, pid: str) -> BranchPoint:
        for p in self.points:
            if p.id == pid:
                return p
        return BranchPoint(pid)


@dataclass(frozen=True)
class Score:
    version: str
    root: TemporalObject
    variables: tuple[str, ...] = ()
    infinity_cap: Fraction | None = None
    branching: BranchSpec | None = None

    def objects(self) -> dict[str, TemporalObject]:
        return {o.id: o for o in self.root.walk()}

    def points(self) -> dict[str, ControlPoint]:
        out: dict[str, ControlPoint] = {}
        for o in self.root.walk():
            for p in o.points:
                out[p.id] = p
        return out


# ---------------------------------------------------------------------------
# rational (de)serialization


def parse_q(value: Any, where: str) -> Fraction:
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{where}: bad rational {value!r}") from exc
    raise ParseError(f"{where}: expected int or 'num/den' string, got {value!r}")


def parse_q_or_inf(value: Any, where: str) -> Q:
    if value == "inf":
        return INF
    return parse_q(value, where)


def dump_q(value: Q) -> Any:
    if value == INF:
        return "inf"
    f = Fraction(value)
    return int(f) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


# ---------------------------------------------------------------------------
# parsing


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ParseError(f"{where}: missing field(s) {sorted(missing)}")


def _parse_interval(obj: Any, where: str) -> IntervalSpec:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: duration must be an object")
    _require_keys(obj, {"min", "nominal", "max"}, {"min", "nominal", "max"}, where)
    return IntervalSpec(
        lo=parse_q(obj["min"], f"{where}.min"),
        nominal=parse_q(obj["nominal"], f"{where}.nominal"),
        hi=parse_q_or_inf(obj["max"], f"{where}.max"),
    )


def _parse_point(obj: Any, owner: str, where: str) -> ControlPoint:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: point must be an object")
    _require_keys(obj, {"id", "role", "kind", "date", "step"}, {"id", "role", "kind", "date"}, where)
    try:
        role = Role(obj["role"])
        kind = PointKind(obj["kind"])
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc
    return ControlPoint(
        id=str(obj["id"]),
        owner=owner,
        role=role,
        kind=kind,
        date=parse_q(obj["date"], f"{where}.date"),
        step=str(obj.get("step", "")),
    )


def _parse_relation(obj: Any, where: str) -> TemporalRelation:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: relation must be an object")
    _require_keys(obj, {"type", "from", "to", "min", "max"}, {"type", "from", "to", "min", "max"}, where)
    try:
        rel_type = RelType(obj["type"])
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc
    return TemporalRelation(
        rel_type=rel_type,
        src=str(obj["from"]),
        dst=str(obj["to"]),
        lo=parse_q(obj["min"], f"{where}.min"),
        hi=parse_q_or_inf(obj["max"], f"{where}.max"),
    )


def _parse_object(obj: Any, where: str) -> TemporalObject:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: temporal object must be an object")
    allowed = {"id", "kind", "process", "behavior", "duration", "points", "relations", "children"}
    _require_keys(obj, allowed, {"id", "kind", "duration", "points"}, where)
    oid = str(obj["id"])
    try:
        kind = Kind(obj["kind"])
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc
    behavior_raw = obj.get("behavior")
    behavior = None
    if behavior_raw is not None:
        try:
            behavior = Behavior(behavior_raw)
        except ValueError as exc:
            raise ParseError(f"{where}.behavior: {exc}") from exc
    points = tuple(
        _parse_point(p, oid, f"{where}.points[{i}]") for i, p in enumerate(obj.get("points", []))
    )
    relations = tuple(
        _parse_relation(r, f"{where}.relations[{i}]") for i, r in enumerate(obj.get("relations") or [])
    )
    children = tuple(
        _parse_object(c, f"{where}.children[{i}]") for i, c in enumerate(obj.get("children") or [])
    )
    return TemporalObject(
        id=oid,
        kind=kind,
        duration=_parse_interval(obj["duration"], f"{where}.duration"),
        points=points,
        process=obj.get("process"),
        behavior=behavior,
        children=children,
        relations=relations,
    )


def _parse_branching(obj: Any, where: str) -> BranchSpec:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: branching must be an object")
    _require_keys(obj, {"points", "intervals"}, {"points", "intervals"}, where)
    points = []
    for i, p in enumerate(obj["points"]):
        w = f"{where}.points[{i}]"
        _require_keys(p, {"id", "wait", "choose"}, {"id"}, w)
        try:
            points.append(
                BranchPoint(str(p["id"]), Wait(p.get("wait", "first")), Choose(p.get("choose", "all")))
            )
        except ValueError as exc:
            raise ParseError(f"{w}: {exc}") from exc
    intervals = []
    for i, iv in enumerate(obj["intervals"]):
        w = f"{where}.intervals[{i}]"
        _require_keys(
            iv,
            {"id", "from", "to", "condition", "interpretation", "duration", "process"},
            {"id", "from", "to", "condition", "interpretation", "duration"},
            w,
        )
        try:
            interp = Interp(iv["interpretation"])
        except ValueError as exc:
            raise ParseError(f"{w}: {exc}") from exc
        intervals.append(
            BranchInterval(
                id=str(iv["id"]),
                src=str(iv["from"]),
                dst=str(iv["to"]),
                condition=str(iv["condition"]),
                interpretation=interp,
                duration=_parse_interval(iv["duration"], f"{w}.duration"),
                process=str(iv.get("process", "")),
            )
        )
    return BranchSpec(points=tuple(points), intervals=tuple(intervals))


def parse_score(text: str) -> Score:
    """Parse a score document; rejects unknown fields, duplicate ids and
    relations that reference points absent from the tree."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"syntax error: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    _require_keys(
        doc,
        {"version", "infinity_cap", "variables", "root", "branching"},
        {"version", "root"},
        "document",
    )
    cap_raw = doc.get("infinity_cap")
    cap = None if cap_raw is None else parse_q(cap_raw, "infinity_cap")
    root = _parse_object(doc["root"], "root")
    branching_raw = doc.get("branching")
    branching = None if branching_raw is None else _parse_branching(branching_raw, "branching")
    score = Score(
        version=str(doc["version"]),
        root=root,
        variables=tuple(str(v) for v in doc.get("variables") or ()),
        infinity_cap=cap,
        branching=branching,
    )
    _check_references(score)
    return score


def _check_references(score: Score) -> None:
    seen: set[str] = set()
    for obj in score.root.walk():
        if obj.id in seen:
            raise ParseError(f"duplicate id {obj.id!r}")
        seen.add(obj.id)
        for p in obj.points:
            if p.id in seen:
                raise ParseError(f"duplicate id {p.id!r}")
            seen.add(p.id)
    point_ids = set(score.points())
    for obj in score.root.walk():
        for rel in obj.relations:
            for pid in (rel.src, rel.dst):
                if pid not in point_ids:
                    raise ParseError(f"relation in {obj.id!r} references unknown point {pid!r}")
    if score.branching is not None:
        for iv in score.branching.intervals:
            if iv.id in seen:
                raise ParseError(f"duplicate id {iv.id!r}")
            seen.add(iv.id)


# ---------------------------------------------------------------------------
# serialization


def _dump_interval(iv: IntervalSpec) -> dict:
    return {"min": dump_q(iv.lo), "nominal": dump_q(iv.nominal), "max": dump_q(iv.hi)}


def _dump_object(obj: TemporalObject) -> dict:
    return {
        "id": obj.id,
        "kind": obj.kind.value,
        "process": obj.process,
        "behavior": obj.behavior.value if obj.behavior else None,
        "duration": _dump_interval(obj.duration),
        "points": [
            {
                "id": p.id,
                "role": p.role.value,
                "kind": p.kind.value,
                "date": dump_q(p.date),
                "step": p.step,
            }
            for p in obj.points
        ],
        "relations": [
            {
                "type": r.rel_type.value,
                "from": r.src,
                "to": r.dst,
                "min": dump_q(r.lo),
                "max": dump_q(r.hi),
            }
            for r in obj.relations
        ],
        "children": [_dump_object(c) for c in obj.children],
    }


def serialize_score(score: Score) -> str:
    doc = {
        "version": score.version,
        "infinity_cap": None if score.infinity_cap is None else dump_q(score.infinity_cap),
        "variables": list(score.variables),
        "root": _dump_object(score.root),
        "branching": None
        if score.branching is None
        else {
            "points": [
                {"id": p.id, "wait": p.wait.value, "choose": p.choose.value}
                for p in score.branching.points
            ],
            "intervals": [
                {
                    "id": iv.id,
                    "from": iv.src,
                    "to": iv.dst,
                    "condition": iv.condition,
                    "interpretation": iv.interpretation.value,
                    "duration": _dump_interval(iv.duration),
                    "process": iv.process,
                }
                for iv in score.branching.intervals
            ],
        },
    }
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# validation


def point_offset(structure: TemporalObject, point: ControlPoint) -> Fraction:
    """Date of ``point`` relative to the start of ``structure``.

    A structure's own points are dated in its parent's referential, while its
    children's points are dated in the structure's own referential.
    """
    if point.owner == structure.id:
        return point.date - structure.start.date
    return point.date


def _scope_points(structure: TemporalObject) -> dict[str, ControlPoint]:
    scope = {p.id: p for p in structure.points}
    for child in structure.children:
        for p in child.points:
            scope[p.id] = p
    return scope


def validate(score: Score) -> list[Violation]:
    """Check every model invariant; returns an empty list iff the score is valid."""
    out: list[Violation] = []

    def bad(code: str, subject: str, message: str) -> None:
        out.append(Violation(code, subject, message))

    if score.root.kind is not Kind.STRUCTURE:
        bad("root-not-structure", score.root.id, "root object must be a structure")

    finite_bounds: list[Q] = []
    for obj in score.root.walk():
        w = obj.id
        iv = obj.duration
        if iv.lo < 0:
            bad("negative-bound", w, "duration min must be >= 0")
        if not (iv.lo <= iv.nominal <= iv.hi):
            bad("min-exceeds-max", w, f"duration must satisfy min <= nominal <= max, got "
                f"[{iv.lo}, {iv.nominal}, {iv.hi}]")
        for v in (iv.lo, iv.nominal, iv.hi):
            if v != INF:
                finite_bounds.append(v)

        if obj.kind is Kind.TEXTURE:
            if obj.children:
                bad("texture-with-children", w, "textures have no children")
            if obj.relations:
                bad("texture-with-relations", w, "textures have no relations")
            if obj.behavior is not None:
                bad("texture-with-behavior", w, "textures have no behavior")
            if obj.process is None:
                bad("texture-without-process", w, "textures must name a process")
        else:
            if obj.process is not None:
                bad("structure-with-process", w, "structures have no process")
            if obj.behavior is None:
                bad("structure-without-behavior", w, "structures must declare a behavior")
            if obj.behavior is Behavior.PROPORTIONAL and not iv.rigid:
                bad("proportional-not-rigid", w,
                    "Proportional requires rigid duration (min exceeds max or min != max)")

        starts = [p for p in obj.points if p.role is Role.START]
        ends = [p for p in obj.points if p.role is Role.END]
        if len(starts) != 1 or len(ends) != 1:
            bad("start-end-points", w, "every object needs exactly one start and one end point")
            continue
        start, end = starts[0], ends[0]
        if start.date > end.date:
            bad("start-after-end", w, "start written date must be <= end written date")
        if end.date - start.date != iv.nominal:
            bad("nominal-date-mismatch", w,
                f"duration nominal {iv.nominal} != end - start = {end.date - start.date}")
        for p in obj.points:
            if p.date < 0:
                bad("negative-date", p.id, "written dates must be >= 0")

        if obj.kind is Kind.STRUCTURE:
            scope = _scope_points(obj)
            for rel in obj.relations:
                subj = f"{rel.src}->{rel.dst}"
                if rel.src == rel.dst:
                    bad("self-relation", subj, "relation endpoints must differ")
                if rel.lo < 0:
                    bad("negative-bound", subj, "relation min must be >= 0")
                if rel.lo > rel.hi:
                    bad("min-exceeds-max", subj, f"min {rel.lo} exceeds max {rel.hi}")
                if rel.src not in scope or rel.dst not in scope:
                    bad("out-of-scope", subj,
                        "relation endpoints must belong to the structure's scope")
                    continue
                for v in (rel.lo, rel.hi):
                    if v != INF:
                        finite_bounds.append(v)
                # written dates must satisfy the relation's [min, max]
                a, b = scope[rel.src], scope[rel.dst]
                gap = point_offset(obj, b) - point_offset(obj, a)
                if rel.rel_type is RelType.POST:
                    gap = -gap
                if not (rel.lo <= gap <= rel.hi):
                    bad("dates-violate-relation", subj,
                        f"written gap {gap} outside [{rel.lo}, {rel.hi}]")
            for child in obj.children:
                off = point_offset(obj, child.start)
                if off < 0:
                    bad("child-before-parent", child.id, "child starts before its structure")
                end_gap = obj.duration.nominal - point_offset(obj, child.end)
                if end_gap < 0:
                    bad("child-after-parent", child.id, "child ends after its structure")

    if score.infinity_cap is not None:
        for v in finite_bounds:
            if v > score.infinity_cap:
                bad("cap-too-small", "infinity_cap",
                    f"infinity_cap {score.infinity_cap} < finite bound {v}")
                break

    if score.branching is not None:
        from .conditions import ConditionError, parse_condition

        declared = set(score.variables)
        seen_pairs: set[tuple[str, str]] = set()
        for iv in score.branching.intervals:
            if (iv.src, iv.dst) in seen_pairs:
                bad("duplicate-interval", iv.id,
                    f"a single interval is allowed between {iv.src} and {iv.dst}")
            seen_pairs.add((iv.src, iv.dst))
            d = iv.duration
            if not (0 <= d.lo <= d.nominal <= d.hi):
                bad("min-exceeds-max", iv.id, "interval duration bounds out of order")
            try:
                expr = parse_condition(iv.condition)
            except ConditionError as exc:
                bad("bad-condition", iv.id, str(exc))
                continue
            undeclared = expr.variables() - declared
            if undeclared:
                bad("undeclared-variable", iv.id,
                    f"condition references undeclared variable(s) {sorted(undeclared)}")

    return out


# ---------------------------------------------------------------------------
# canonicalization


def canonicalize_relations(score: Score) -> Score:
    """Rewrite every Post(a, b, t1, t2) as the symmetric Pre(b, a, t1, t2).

    The admissible set of date assignments is unchanged; the output contains
    only Pre relations.  Idempotent.
    """

    def canon(obj: TemporalObject) -> TemporalObject:
        relations = tuple(
            r
            if r.rel_type is RelType.PRE
            else TemporalRelation(RelType.PRE, r.dst, r.src, r.lo, r.hi)
            for r in obj.relations
        )
        children = tuple(canon(c) for c in obj.children)
        if relations == obj.relations and children == obj.children:
            return obj
        return replace(obj, relations=relations, children=children)

    root = canon(score.root)
    return score if root is score.root else replace(score, root=root)
