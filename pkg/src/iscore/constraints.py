"""Interval-constraint graphs and projection-compiled propagation plans.

Every constraint is a sum equality ``left = r1 + ... + rn`` over interval
variables.  Series chains in the series-parallel decomposition sum to their
enclosing span; parallel branches between shared endpoints are tied through
an auxiliary span variable (one equality per branch); every residual arc is
tied to an in-subgraph path between the same endpoints, which is exactly
where cycles come from.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .graph import EventGraph, duration_var
from .model import INF, Behavior, Kind, PointKind, Q, Role, Score, TemporalObject
from .sp import SPNode, SPSubgraph


@dataclass(frozen=True)
class Variable:
    name: str
    lo: Fraction
    hi: Q
    nominal: Fraction


@dataclass(frozen=True)
class SumEquality:
    left: str
    right: tuple[str, ...]

    def render(self) -> str:
        return f"{self.left} = {' + '.join(self.right)}"


@dataclass(frozen=True)
class ConstraintGraph:
    variables: dict[str, Variable]
    constraints: tuple[SumEquality, ...]
    auxiliaries: tuple[str, ...]

    def merged_with(self, other: "ConstraintGraph") -> "ConstraintGraph":
        variables = dict(self.variables)
        variables.update(other.variables)
        return ConstraintGraph(
            variables=variables,
            constraints=self.constraints + other.constraints,
            auxiliaries=self.auxiliaries + other.auxiliaries,
        )


def _parallel_branches(node: SPNode) -> list[SPNode]:
    if node.kind == "parallel":
        return _parallel_branches(node.left) + _parallel_branches(node.right)
    return [node]


def derive_interval_constraints(
    g: EventGraph, sp: SPSubgraph, structure: TemporalObject
) -> ConstraintGraph:
    variables: dict[str, Variable] = {}
    for arc in g.arcs:
        b = arc.bounds
        variables[arc.id] = Variable(arc.id, b.lo, b.hi, b.nominal)
    dvar = duration_var(structure.id)
    d = structure.duration
    variables[dvar] = Variable(dvar, d.lo, d.hi, d.nominal)

    constraints: list[SumEquality] = []
    auxiliaries: list[str] = []

    def chain_terms(node: SPNode) -> list[str]:
        if node.kind == "leaf":
            assert node.arc is not None
            return [node.arc.id]
        if node.kind == "series":
            assert node.left is not None and node.right is not None
            return chain_terms(node.left) + chain_terms(node.right)
        # parallel: tie every branch to one auxiliary span variable
        branches = _parallel_branches(node)
        aux = f"x:{node.src}->{node.dst}"
        branch_terms = [chain_terms(b) for b in branches]
        lo = max(sum((variables[t].lo for t in terms), Fraction(0)) for terms in branch_terms)
        hi = min(_sum_hi(variables, terms) for terms in branch_terms)
        nominal = sum((variables[t].nominal for t in branch_terms[0]), Fraction(0))
        variables[aux] = Variable(aux, lo, hi, nominal)
        auxiliaries.append(aux)
        for terms in branch_terms:
            constraints.append(SumEquality(aux, tuple(terms)))
        return branch_terms[0]

    constraints.insert(0, SumEquality(dvar, tuple(chain_terms(sp.decomposition))))
    # constraints built depth-first; put the structure equality first
    top, rest = constraints[0], constraints[1:]
    constraints = [top, *rest]

    for arc in sp.residual:
        path = _path_terms(sp, arc.src, arc.dst)
        if path is None:
            continue  # endpoint fell out of the subgraph; variable stays bounded but untied
        constraints.append(SumEquality(arc.id, tuple(path)))

    return ConstraintGraph(dict(variables), tuple(constraints), tuple(auxiliaries))


def _sum_hi(variables: dict[str, Variable], terms: list[str]) -> Q:
    total: Q = Fraction(0)
    for t in terms:
        hi = variables[t].hi
        if hi == INF:
            return INF
        total += hi
    return total


def _path_terms(sp: SPSubgraph, src: str, dst: str) -> list[str] | None:
    adj: dict[str, list] = {}
    for a in sorted(sp.arcs, key=lambda x: x.id):
        adj.setdefault(a.src, []).append(a)
    queue = deque([(src, [])])
    seen = {src}
    while queue:
        v, path = queue.popleft()
        if v == dst:
            return [a.id for a in path]
        for a in adj.get(v, []):
            if a.dst not in seen:
                seen.add(a.dst)
                queue.append((a.dst, path + [a]))
    return None


# ---------------------------------------------------------------------------
# propagation plans


@dataclass(frozen=True)
class Action:
    op: str  # Shift | ShrinkToward | GrowToward | ScaleGroup | SetParent
    targets: tuple[str, ...]
    limit: str | None = None

    def render(self) -> str:
        limit = f" limit={self.limit}" if self.limit else ""
        return f"{self.op}({', '.join(self.targets)}){limit}"


@dataclass(frozen=True)
class PlanLevel:
    """One equality to re-balance, in the behavior of its owning structure."""

    equality: SumEquality
    behavior: Behavior
    changed: str  # right-hand variable carrying the perturbation at this level
    structure: str


@dataclass(frozen=True)
class PropagationPlan:
    trigger: str  # dynamic point id
    changed: str  # perturbed interval variable
    anchor: str  # vertex whose firing time anchors the changed variable
    levels: tuple[PlanLevel, ...]
    actions: tuple[Action, ...]
    orientation: tuple[tuple[str, str], ...]
    residuals: tuple[SumEquality, ...]
    secondary: tuple = ()  # other incoming arcs of the trigger vertex
    host_graph: "EventGraph | None" = None


def _level_actions(level: PlanLevel, downstream: tuple[str, ...]) -> list[Action]:
    eq, changed = level.equality, level.changed
    idx = eq.right.index(changed)
    after = [v for v in eq.right[idx + 1 :]]
    parent = eq.left
    if level.behavior is Behavior.FERMATA:
        return [
            Action("Shift", downstream),
            Action("GrowToward", (parent,), limit=f"{parent}.max"),
        ]
    if level.behavior is Behavior.CHRONOLOGICAL:
        return [
            *(Action("ShrinkToward", (w,), limit=f"{w}.min") for w in after),
            Action("GrowToward", (parent,), limit=f"{parent}.max"),
        ]
    if level.behavior is Behavior.ANTICHRONOLOGICAL:
        return [
            Action("GrowToward", (parent,), limit=f"{parent}.max"),
            *(Action("ShrinkToward", (w,), limit=f"{w}.min") for w in reversed(after)),
        ]
    return [Action("ScaleGroup", tuple(after), limit=parent)]


def _equality_containing(cg: ConstraintGraph, var: str) -> SumEquality | None:
    for eq in cg.constraints:
        if var in eq.right:
            return eq
    return None


def compile_propagation_plans(
    cgs: dict[str, ConstraintGraph],
    graphs: dict[str, EventGraph],
    score: Score,
) -> dict[str, PropagationPlan]:
    """Statically compile one ordered action list per dynamic point.

    ``cgs``/``graphs`` map structure id to its constraint/event graph.
    """
    parent_of: dict[str, str] = {}
    behaviors: dict[str, Behavior] = {}
    for obj in score.root.walk():
        if obj.kind is Kind.STRUCTURE:
            assert obj.behavior is not None
            behaviors[obj.id] = obj.behavior
        for child in obj.children:
            parent_of[child.id] = obj.id

    plans: dict[str, PropagationPlan] = {}
    for obj in score.root.walk():
        for point in obj.points:
            if point.kind is not PointKind.DYNAMIC:
                continue
            if point.role is Role.INTERNAL:
                host = obj.id
            elif obj.id in parent_of:
                host = parent_of[obj.id]
            else:
                continue  # the root's own terminals have no enclosing graph
            g = graphs[host]
            if point.id not in g.vertices or point.id == g.alpha:
                continue
            incoming = sorted(g.in_arcs(point.id), key=lambda a: (a.src != g.alpha, a.id))
            if not incoming:
                continue
            changed = incoming[0].id

            levels: list[PlanLevel] = []
            actions: list[Action] = []
            orientation: list[tuple[str, str]] = []
            var = changed
            struct = host
            while True:
                eq = _equality_containing(cgs[struct], var)
                if eq is None:
                    break
                level = PlanLevel(eq, behaviors[struct], var, struct)
                levels.append(level)
                downstream = _downstream_vertices(g, point.id) if not levels[:-1] else ()
                acts = _level_actions(level, downstream)
                actions.extend(acts)
                for act in acts:
                    for t in act.targets:
                        orientation.append((var, t))
                parent = eq.left
                if parent != duration_var(struct) or struct not in parent_of:
                    break
                var = parent
                struct = parent_of[struct]

            residuals = tuple(
                eq
                for s, cg in sorted(cgs.items())
                for eq in cg.constraints
                if eq not in [lv.equality for lv in levels]
                and _touches(eq, {lv.equality.left for lv in levels} | {changed})
            )
            plans[point.id] = PropagationPlan(
                trigger=point.id,
                changed=changed,
                anchor=incoming[0].src,
                levels=tuple(levels),
                actions=tuple(actions),
                orientation=tuple(orientation),
                residuals=residuals,
                secondary=tuple(incoming[1:]),
                host_graph=g,
            )
    return plans


def _touches(eq: SumEquality, vars: set[str]) -> bool:
    return bool(vars & (set(eq.right) | {eq.left}))


def _downstream_vertices(g: EventGraph, start: str) -> tuple[str, ...]:
    seen: set[str] = set()
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for a in g.out_arcs(v):
            if a.dst not in seen:
                seen.add(a.dst)
                queue.append(a.dst)
    return tuple(sorted(seen))
