"""Hierarchical time-flush Petri net compiled from a score.

Each control-point vertex becomes a transition and each interval arc a
place between its delimiting transitions.  Place-to-transition arcs carry a
[0, inf] range and the written interval value as nominal; quantitative
bounds beyond that live in the constraint graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .graph import EventGraph, build_event_graph
from .model import INF, Kind, Q, Score, TemporalObject


@dataclass(frozen=True)
class Transition:
    id: str
    points: frozenset[str]
    dynamic: bool


@dataclass(frozen=True)
class Place:
    id: str
    interval_variable: str
    input: str  # transition feeding the place
    output: str  # transition consuming the place
    range_lo: Fraction
    range_hi: Q
    nominal: Fraction


@dataclass(frozen=True)
class PetriNet:
    structure: str
    transitions: dict[str, Transition]
    places: dict[str, Place]
    hierarchy: dict[str, "PetriNet"]

    def walk(self):
        yield self
        for sub in self.hierarchy.values():
            yield from sub.walk()


def _net_of(graph: EventGraph) -> tuple[dict[str, Transition], dict[str, Place]]:
    transitions = {
        v.id: Transition(v.id, frozenset(pid for pid, _, _ in v.labels), v.dynamic)
        for v in graph.vertices.values()
    }
    places = {}
    for arc in graph.arcs:
        pid = f"p:{arc.id}"
        places[pid] = Place(
            id=pid,
            interval_variable=arc.id,
            input=arc.src,
            output=arc.dst,
            range_lo=Fraction(0),
            range_hi=INF,
            nominal=arc.bounds.nominal,
        )
    return transitions, places


def compile_petri(score: Score, graphs: dict[str, EventGraph] | None = None) -> PetriNet:
    """Translate a validated, canonicalized score into a hierarchical net."""
    if graphs is None:
        graphs = {
            o.id: build_event_graph(o)
            for o in score.root.walk()
            if o.kind is Kind.STRUCTURE
        }

    def build(structure: TemporalObject) -> PetriNet:
        transitions, places = _net_of(graphs[structure.id])
        hierarchy = {
            child.id: build(child)
            for child in structure.children
            if child.kind is Kind.STRUCTURE
        }
        return PetriNet(structure.id, transitions, places, hierarchy)

    return build(score.root)


def flatten(net: PetriNet) -> tuple[dict[str, Transition], dict[str, Place]]:
    """Union of all subnets.  Child start/end transitions coincide with the
    subnet's terminals (same point ids), so transitions merge by id; a
    merged transition is dynamic if any constituent is."""
    transitions: dict[str, Transition] = {}
    places: dict[str, Place] = {}
    for sub in net.walk():
        for t in sub.transitions.values():
            prev = transitions.get(t.id)
            if prev is None:
                transitions[t.id] = t
            else:
                transitions[t.id] = Transition(
                    t.id, prev.points | t.points, prev.dynamic or t.dynamic
                )
        for p in sub.places.values():
            places[p.id] = p
    return transitions, places
