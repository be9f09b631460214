"""Two-terminal series-parallel recognition, decomposition and extraction.

The extracted subgraph keeps the terminals and as many vertices as possible:
exhaustive search over arc subsets on small graphs, a deterministic greedy
N-pattern breaker above that.  Arcs may be dropped between retained
vertices; a vertex leaves the subgraph only when all its arcs are dropped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .graph import Arc, EventGraph

_EXHAUSTIVE_VERTEX_LIMIT = 8
_EXHAUSTIVE_ARC_LIMIT = 14


@dataclass(frozen=True)
class SPNode:
    """Binary decomposition tree node spanning src -> dst."""

    kind: str  # "leaf" | "series" | "parallel"
    src: str
    dst: str
    arc: Arc | None = None
    left: "SPNode | None" = None
    right: "SPNode | None" = None

    def arcs(self) -> list[Arc]:
        if self.kind == "leaf":
            assert self.arc is not None
            return [self.arc]
        assert self.left is not None and self.right is not None
        return self.left.arcs() + self.right.arcs()

    def min_arc_id(self) -> str:
        return min(a.id for a in self.arcs())

    def render(self) -> str:
        if self.kind == "leaf":
            assert self.arc is not None
            return self.arc.id
        assert self.left is not None and self.right is not None
        op = "series" if self.kind == "series" else "parallel"
        return f"({op} {self.left.render()} {self.right.render()})"


@dataclass(frozen=True)
class SPSubgraph:
    vertices: frozenset[str]
    arcs: tuple[Arc, ...]
    decomposition: SPNode
    residual: tuple[Arc, ...]


def recognize(arcs: list[Arc], alpha: str, beta: str) -> SPNode | None:
    """Reduce the multigraph by series/parallel steps; returns the
    decomposition tree if it collapses to a single alpha->beta node."""
    if not arcs:
        return None
    nodes: list[SPNode] = [SPNode("leaf", a.src, a.dst, arc=a) for a in arcs]
    changed = True
    while changed and len(nodes) > 1:
        changed = False
        # parallel reduction: two nodes spanning the same endpoints
        by_span: dict[tuple[str, str], list[SPNode]] = {}
        for n in nodes:
            by_span.setdefault((n.src, n.dst), []).append(n)
        for span, group in sorted(by_span.items()):
            if len(group) >= 2:
                group.sort(key=SPNode.min_arc_id)
                a, b = group[0], group[1]
                nodes.remove(a)
                nodes.remove(b)
                nodes.append(SPNode("parallel", span[0], span[1], left=a, right=b))
                changed = True
                break
        if changed:
            continue
        # series reduction: interior vertex with exactly one in- and out-node
        incoming: dict[str, list[SPNode]] = {}
        outgoing: dict[str, list[SPNode]] = {}
        for n in nodes:
            incoming.setdefault(n.dst, []).append(n)
            outgoing.setdefault(n.src, []).append(n)
        interior = sorted(set(incoming) & set(outgoing) - {alpha, beta})
        for v in interior:
            if len(incoming[v]) == 1 and len(outgoing[v]) == 1:
                a, b = incoming[v][0], outgoing[v][0]
                nodes.remove(a)
                nodes.remove(b)
                nodes.append(SPNode("series", a.src, b.dst, left=a, right=b))
                changed = True
                break
    if len(nodes) == 1 and nodes[0].src == alpha and nodes[0].dst == beta:
        return nodes[0]
    return None


def _covered(arcs: tuple[Arc, ...] | list[Arc], alpha: str, beta: str) -> frozenset[str]:
    vs = {alpha, beta}
    for a in arcs:
        vs.add(a.src)
        vs.add(a.dst)
    return frozenset(vs)


def _exhaustive(g: EventGraph) -> SPSubgraph | None:
    arcs = sorted(g.arcs, key=lambda a: a.id)
    best: tuple[int, int, tuple[str, ...]] | None = None
    best_sub: SPSubgraph | None = None
    for r in range(len(arcs), 0, -1):
        for combo in itertools.combinations(arcs, r):
            node = recognize(list(combo), g.alpha, g.beta)
            if node is None:
                continue
            vs = _covered(combo, g.alpha, g.beta)
            # prefer more vertices, then more arcs, then lexicographically
            # smallest arc-id tuple
            ids = tuple(a.id for a in combo)
            key2 = (len(vs), r)
            if best is None or key2 > best[:2] or (key2 == best[:2] and ids < best[2]):
                best = (len(vs), r, ids)
                residual = tuple(a for a in arcs if a not in combo)
                best_sub = SPSubgraph(vs, combo, node, residual)
        if best is not None and best[0] == len(g.vertices):
            # no larger vertex count is possible and smaller arc sets cannot
            # beat the current arc count at this vertex count
            break
    return best_sub


def _greedy(g: EventGraph) -> SPSubgraph:
    arcs = sorted(g.arcs, key=lambda a: a.id)
    kept = list(arcs)
    while True:
        node = recognize(kept, g.alpha, g.beta)
        if node is not None:
            break
        indeg: dict[str, int] = {}
        outdeg: dict[str, int] = {}
        for a in kept:
            outdeg[a.src] = outdeg.get(a.src, 0) + 1
            indeg[a.dst] = indeg.get(a.dst, 0) + 1
        candidate = None
        for a in kept:  # lexicographic by construction
            # an N-pattern arc: its removal cannot isolate either endpoint
            if outdeg.get(a.src, 0) >= 2 and indeg.get(a.dst, 0) >= 2:
                candidate = a
                break
        if candidate is None:
            # fall back to a bare alpha->beta path, which is always series
            path = _some_path(kept, g.alpha, g.beta)
            kept = path
            node = recognize(kept, g.alpha, g.beta)
            break
        kept.remove(candidate)
    assert node is not None
    vs = _covered(kept, g.alpha, g.beta)
    residual = tuple(a for a in arcs if a not in kept)
    return SPSubgraph(vs, tuple(kept), node, residual)


def _some_path(arcs: list[Arc], alpha: str, beta: str) -> list[Arc]:
    adj: dict[str, list[Arc]] = {}
    for a in sorted(arcs, key=lambda x: x.id):
        adj.setdefault(a.src, []).append(a)
    stack: list[tuple[str, list[Arc]]] = [(alpha, [])]
    seen: set[str] = set()
    while stack:
        v, path = stack.pop()
        if v == beta:
            return path
        if v in seen:
            continue
        seen.add(v)
        for a in reversed(adj.get(v, [])):
            stack.append((a.dst, path + [a]))
    raise AssertionError(f"no path from {alpha} to {beta}")


def extract_sp_subgraph(g: EventGraph) -> SPSubgraph:
    """Maximal (by vertex count) two-terminal series-parallel subgraph of g."""
    if len(g.vertices) <= _EXHAUSTIVE_VERTEX_LIMIT and len(g.arcs) <= _EXHAUSTIVE_ARC_LIMIT:
        sub = _exhaustive(g)
        if sub is not None:
            return sub
    return _greedy(g)
