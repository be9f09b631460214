"""Event graphs: control points as vertices, bounded intervals as arcs.

One event graph is built per structure.  Vertices are the structure's own
points plus its children's start/end points; alpha/beta are the vertices
carrying the structure's start/end points.  Arcs come from explicit Pre
relations and from the implicit precedences between a structure and its
children; a child's own duration appears as a start->end arc whose variable
is shared with the child's graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter

from .model import (
    INF,
    CompileError,
    IntervalSpec,
    Kind,
    PointKind,
    Role,
    TemporalObject,
    point_offset,
)


def duration_var(object_id: str) -> str:
    """Name of the duration variable of a temporal object."""
    return f"d:{object_id}"


@dataclass(frozen=True)
class Vertex:
    id: str
    labels: frozenset[tuple[str, Role, PointKind]]  # (point id, role, kind)

    @property
    def dynamic(self) -> bool:
        return any(kind is PointKind.DYNAMIC for _, _, kind in self.labels)


@dataclass(frozen=True)
class Arc:
    id: str  # doubles as the interval variable name
    src: str
    dst: str
    bounds: IntervalSpec


@dataclass(frozen=True)
class EventGraph:
    structure: str
    vertices: dict[str, Vertex]
    arcs: tuple[Arc, ...]
    alpha: str
    beta: str

    def out_arcs(self, v: str) -> list[Arc]:
        return [a for a in self.arcs if a.src == v]

    def in_arcs(self, v: str) -> list[Arc]:
        return [a for a in self.arcs if a.dst == v]

    def topological_order(self) -> list[str]:
        ts = TopologicalSorter({v: set() for v in self.vertices})
        for a in self.arcs:
            ts.add(a.dst, a.src)
        try:
            return list(ts.static_order())
        except CycleError as exc:
            raise CompileError(f"relations of {self.structure!r} form a cycle: {exc.args[1]}")


def _arc_id(src: str, dst: str, used: set[str]) -> str:
    base = f"{src}->{dst}"
    name = base
    n = 1
    while name in used:
        n += 1
        name = f"{base}#{n}"
    used.add(name)
    return name


def build_event_graph(structure: TemporalObject) -> EventGraph:
    """Build the two-terminal event graph of one validated structure."""
    if structure.kind is not Kind.STRUCTURE:
        raise CompileError(f"{structure.id!r} is not a structure")
    dur = structure.duration

    vertices: dict[str, Vertex] = {}

    def add_point(pid: str, role: Role, kind: PointKind) -> None:
        vertices[pid] = Vertex(pid, frozenset({(pid, role, kind)}))

    for p in structure.points:
        add_point(p.id, p.role, p.kind)
    for child in structure.children:
        for p in (child.start, child.end):
            add_point(p.id, p.role, p.kind)

    alpha = structure.start.id
    beta = structure.end.id

    arcs: list[Arc] = []
    used: set[str] = set()

    def offset(pid: str) -> Fraction:
        point = next(
            p
            for o in (structure, *structure.children)
            for p in o.points
            if p.id == pid
        )
        return point_offset(structure, point)

    for child in structure.children:
        s, e = child.start.id, child.end.id
        arcs.append(
            Arc(_arc_id(alpha, s, used), alpha, s, IntervalSpec(Fraction(0), offset(s), INF))
        )
        # the child-duration arc shares its variable with the child's own graph
        used.add(duration_var(child.id))
        arcs.append(Arc(duration_var(child.id), s, e, child.duration))
        arcs.append(
            Arc(
                _arc_id(e, beta, used),
                e,
                beta,
                IntervalSpec(Fraction(0), dur.nominal - offset(e), INF),
            )
        )

    for rel in structure.relations:
        # pre-canonicalized scores contain only Pre relations
        nominal = offset(rel.dst) - offset(rel.src)
        arcs.append(
            Arc(
                _arc_id(rel.src, rel.dst, used),
                rel.src,
                rel.dst,
                IntervalSpec(rel.lo, nominal, rel.hi),
            )
        )

    # internal points of the structure with no incident arcs yet are hooked to
    # the terminals so every vertex lies on an alpha->beta path
    have_in = {a.dst for a in arcs}
    have_out = {a.src for a in arcs}
    for v in sorted(vertices):
        if v in (alpha, beta):
            continue
        if v not in have_in:
            arcs.append(
                Arc(_arc_id(alpha, v, used), alpha, v, IntervalSpec(Fraction(0), offset(v), INF))
            )
        if v not in have_out:
            arcs.append(
                Arc(
                    _arc_id(v, beta, used),
                    v,
                    beta,
                    IntervalSpec(Fraction(0), dur.nominal - offset(v), INF),
                )
            )

    if not arcs:  # empty structure: single duration arc
        arcs.append(Arc(_arc_id(alpha, beta, used), alpha, beta, dur))

    graph = EventGraph(
        structure=structure.id,
        vertices=vertices,
        arcs=tuple(sorted(arcs, key=lambda a: a.id)),
        alpha=alpha,
        beta=beta,
    )
    graph.topological_order()  # raises CompileError on contradictory relations
    return graph


def reduce_zero_delays(g: EventGraph) -> EventGraph:
    """Remove every [0,0]/0 arc by merging its source into its destination.

    The source's predecessors and successors are reattached to the
    destination and its labels merged in.  Deterministic: the
    lexicographically smallest zero arc is processed first; the result is
    order-independent because merging is confluent.
    """
    vertices = dict(g.vertices)
    arcs = list(g.arcs)
    alpha, beta = g.alpha, g.beta

    def is_zero(a: Arc) -> bool:
        return a.bounds.lo == 0 and a.bounds.hi == 0 and a.bounds.nominal == 0

    while True:
        zeros = sorted((a for a in arcs if is_zero(a)), key=lambda a: a.id)
        if not zeros:
            break
        dead = zeros[0]
        a, b = dead.src, dead.dst
        merged = Vertex(b, vertices[b].labels | vertices[a].labels)
        del vertices[a]
        vertices[b] = merged
        new_arcs: list[Arc] = []
        for arc in arcs:
            if arc is dead:
                continue
            src = b if arc.src == a else arc.src
            dst = b if arc.dst == a else arc.dst
            if src == dst:
                if arc.bounds.lo == 0:
                    continue  # redundant self-loop admitted by the bounds
                raise CompileError(
                    f"zero-delay reduction of {dead.id} creates an unsatisfiable "
                    f"self-loop from {arc.id}"
                )
            new_arcs.append(replace(arc, src=src, dst=dst))
        arcs = new_arcs
        if alpha == a:
            alpha = b
        if beta == a:
            beta = b

    return EventGraph(
        structure=g.structure,
        vertices=vertices,
        arcs=tuple(sorted(arcs, key=lambda x: x.id)),
        alpha=alpha,
        beta=beta,
    )
