"""Whole-score compilation: event graphs, SP subgraphs, constraints, Petri
net and propagation plans, bundled for the runtime."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

from .constraints import (
    ConstraintGraph,
    PropagationPlan,
    compile_propagation_plans,
    derive_interval_constraints,
)
from .graph import Arc, EventGraph, Vertex, build_event_graph
from .model import CompileError, Kind, Score, TemporalObject, canonicalize_relations, validate
from .petri import PetriNet, compile_petri
from .sp import SPSubgraph, extract_sp_subgraph


@dataclass(frozen=True)
class StructureCompilation:
    structure: TemporalObject
    graph: EventGraph
    sp: SPSubgraph
    constraints: ConstraintGraph


@dataclass(frozen=True)
class CompiledScore:
    score: Score
    structures: dict[str, StructureCompilation]
    constraints: ConstraintGraph  # merged over all structures
    petri: PetriNet
    plans: dict[str, PropagationPlan]
    flat: EventGraph  # union of all structure graphs, terminals = root's

    def host_structure(self, point_id: str) -> str | None:
        """Structure whose event graph holds ``point_id`` as a non-alpha vertex."""
        for sid, sc in self.structures.items():
            if point_id in sc.graph.vertices and point_id != sc.graph.alpha:
                return sid
        return None


def compile_score(score: Score, *, validated: bool = False) -> CompiledScore:
    if not validated:
        violations = validate(score)
        if violations:
            raise CompileError(
                "score is invalid: " + "; ".join(str(v) for v in violations)
            )
    score = canonicalize_relations(score)

    structures: dict[str, StructureCompilation] = {}
    for obj in score.root.walk():
        if obj.kind is not Kind.STRUCTURE:
            continue
        graph = build_event_graph(obj)
        sp = extract_sp_subgraph(graph)
        cg = derive_interval_constraints(graph, sp, obj)
        structures[obj.id] = StructureCompilation(obj, graph, sp, cg)

    merged = reduce(
        lambda a, b: a.merged_with(b),
        (structures[sid].constraints for sid in sorted(structures)),
    )
    graphs = {sid: sc.graph for sid, sc in structures.items()}
    petri = compile_petri(score, graphs)
    cgs = {sid: sc.constraints for sid, sc in structures.items()}
    plans = compile_propagation_plans(cgs, graphs, score)

    flat = _flatten_graphs(score, graphs)
    return CompiledScore(score, structures, merged, petri, plans, flat)


def _flatten_graphs(score: Score, graphs: dict[str, EventGraph]) -> EventGraph:
    vertices: dict[str, Vertex] = {}
    arcs: dict[str, Arc] = {}
    for sid in sorted(graphs):
        g = graphs[sid]
        for v in g.vertices.values():
            prev = vertices.get(v.id)
            vertices[v.id] = v if prev is None else Vertex(v.id, prev.labels | v.labels)
        for a in g.arcs:
            arcs[a.id] = a
    root_graph = graphs[score.root.id]
    return EventGraph(
        structure=score.root.id,
        vertices=vertices,
        arcs=tuple(sorted(arcs.values(), key=lambda a: a.id)),
        alpha=root_graph.alpha,
        beta=root_graph.beta,
    )
