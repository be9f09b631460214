"""Independent brute-force references used by the test suite.

Everything here is deliberately naive: exhaustive grid enumeration for the
interval constraints, a trigger-time scan for windows, a recursive
definition check for series-parallel graphs, and a history-scanning tick
simulator for the branching engine.  Correctness rests on simplicity; none
of it runs on the live path.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .compiler import CompiledScore
from .conditions import TV
from .constraints import ConstraintGraph, PropagationPlan, SumEquality, Variable
from .graph import Arc
from .model import INF, Behavior, Q, Score
from .propagate import PropagationState, Window
from .trace import TraceEvent

GRID_CAP = 10**7

Assignment = dict[str, Fraction]


def check_assignment(a: Assignment, cg: ConstraintGraph) -> bool:
    """True iff every sum equality holds exactly and every assigned variable
    is within its bounds."""
    for name, value in a.items():
        var = cg.variables.get(name)
        if var is None:
            continue
        if value < var.lo or value > var.hi:
            return False
    for eq in cg.constraints:
        if eq.left not in a or any(w not in a for w in eq.right):
            continue
        if a[eq.left] != sum((a[w] for w in eq.right), Fraction(0)):
            return False
    return True


def _grid(lo: Fraction, hi: Q, step: Fraction, cap: Fraction) -> list[Fraction]:
    top = cap if hi == INF else Fraction(hi)
    out = []
    v = lo
    while v <= top:
        out.append(v)
        v += step
    return out


def enumerate_assignments(
    cg: ConstraintGraph, step: Q = 1, cap: Q = Fraction(100)
) -> list[Assignment]:
    """All total assignments on the step grid that pass check_assignment."""
    step = Fraction(step)
    cap = Fraction(cap)
    names = sorted(cg.variables)
    grids = [_grid(cg.variables[n].lo, cg.variables[n].hi, step, cap) for n in names]
    size = 1
    for g in grids:
        size *= max(len(g), 1)
        if size > GRID_CAP:
            raise ValueError(f"grid too large ({size} > {GRID_CAP} points)")
    out = []
    for combo in itertools.product(*grids):
        a = dict(zip(names, combo))
        if check_assignment(a, cg):
            out.append(a)
    return out


# ---------------------------------------------------------------------------
# feasible-window scan


def _free_and_fixed(
    plan: PropagationPlan, state: PropagationState
) -> tuple[list[str], set[str]]:
    """Per-behavior split of the plan's equality variables: which may move to
    realize a trigger and which keep their current values."""
    free: list[str] = []
    pinned: set[str] = set()
    path = {plan.changed} | {lv.equality.left for lv in plan.levels}
    for lv in plan.levels:
        eq = lv.equality
        idx = eq.right.index(lv.changed)
        before, after = eq.right[: idx], eq.right[idx + 1 :]
        pinned.update(before)
        if lv.behavior is Behavior.FERMATA:
            pinned.update(w for w in after if w not in path)
        else:
            free.extend(w for w in after if w not in state.fixed and w not in path)
        if lv.behavior is Behavior.PROPORTIONAL:
            pinned.add(eq.left)
    free = [v for v in dict.fromkeys(free) if v not in pinned and v not in state.fixed]
    return free, pinned


def _feasible_at(
    t: Fraction,
    plan: PropagationPlan,
    state: PropagationState,
    cg: ConstraintGraph,
    step: Fraction,
    cap: Fraction,
) -> bool:
    forced: Assignment = dict(state.values)
    anchor_t = state.times[plan.anchor]
    forced[plan.changed] = t - anchor_t
    for arc in plan.secondary:
        src_t = state.times.get(arc.src)
        if src_t is not None:
            forced[arc.id] = t - src_t
    free, pinned = _free_and_fixed(plan, state)
    affected = [lv.equality for lv in plan.levels] + list(plan.residuals)
    sub = ConstraintGraph(cg.variables, tuple(affected), ())
    level_lefts = {lv.equality.left for lv in plan.levels}

    grids = [_grid(cg.variables[n].lo, cg.variables[n].hi, step, cap) for n in free]
    for combo in itertools.product(*grids):
        a = dict(forced)
        a.update(zip(free, combo))
        # cascade lefts (child and structure durations) follow from their own
        # equality unless the behavior pins them; pinned ones are only checked
        for lv in plan.levels:
            left = lv.equality.left
            if left not in pinned and left not in state.fixed:
                a[left] = sum((a[w] for w in lv.equality.right), Fraction(0))
        # residual equalities define their left side from the path sum
        for eq in plan.residuals:
            if eq.left not in level_lefts:
                a[eq.left] = sum((a[w] for w in eq.right), Fraction(0))
        if check_assignment(a, sub):
            return True
    return False


def brute_force_window(
    compiled: CompiledScore,
    point: str,
    state: PropagationState,
    step: Q = 1,
    scan_cap: Q | None = None,
) -> Window:
    """Scan candidate trigger times on the grid; the window is the [min, max]
    of times for which some enumerated assignment realizes the trigger with
    all constraints satisfied and elapsed prefixes fixed.

    If the scan stays feasible all the way to the finite scan cap the latest
    edge is reported as unbounded."""
    plan = compiled.plans.get(point)
    step = Fraction(step)
    if plan is None:
        pts = compiled.score.points()
        date = pts[point].date
        return Window(date, date)
    cg = compiled.constraints
    if scan_cap is None:
        cap = compiled.score.infinity_cap
        if cap is None:
            finite = [Fraction(v.hi) for v in cg.variables.values() if v.hi != INF]
            cap = sum(finite, Fraction(0)) + sum(
                (v.nominal for v in cg.variables.values()), Fraction(0)
            ) + 10
        scan_cap = cap
    scan_cap = Fraction(scan_cap)
    anchor_t = state.times[plan.anchor]
    feasible_times = [
        t
        for t in _grid(anchor_t, anchor_t + scan_cap, step, scan_cap * 2)
        if _feasible_at(t, plan, state, cg, step, scan_cap)
    ]
    if not feasible_times:
        raise ValueError(f"no feasible trigger time for {point}")
    earliest = feasible_times[0]
    latest: Q = feasible_times[-1]
    if latest >= anchor_t + scan_cap:
        latest = INF
    return Window(earliest, latest)


# ---------------------------------------------------------------------------
# independent series-parallel check (recursive definition, no reductions)


def is_series_parallel(arcs: list[Arc], s: str, t: str) -> bool:
    """Two-terminal SP by the recursive definition: a single s->t arc, a
    series composition at a mandatory interior vertex, or a parallel
    composition of arc-disjoint SP graphs sharing only the terminals."""
    key = (frozenset(a.id for a in arcs), s, t)
    cache: dict = _SP_CACHE
    if key in cache:
        return cache[key]
    result = _is_sp(arcs, s, t)
    cache[key] = result
    return result


_SP_CACHE: dict = {}


def _vertices(arcs: list[Arc]) -> set[str]:
    return {a.src for a in arcs} | {a.dst for a in arcs}


def _is_sp(arcs: list[Arc], s: str, t: str) -> bool:
    if not arcs:
        return False
    if len(arcs) == 1:
        return arcs[0].src == s and arcs[0].dst == t
    # parallel split: components connected through interior vertices
    comp: dict[str, int] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    parent = {a.id: a.id for a in arcs}
    by_vertex: dict[str, list[Arc]] = {}
    for a in arcs:
        for v in (a.src, a.dst):
            if v not in (s, t):
                by_vertex.setdefault(v, []).append(a)
    for group in by_vertex.values():
        root = find(group[0].id)
        for a in group[1:]:
            parent[find(a.id)] = root
    groups: dict[str, list[Arc]] = {}
    for a in arcs:
        groups.setdefault(find(a.id), []).append(a)
    if len(groups) >= 2:
        return all(is_series_parallel(g, s, t) for g in groups.values())
    # series split: an interior vertex every arc set partitions around
    for v in sorted(_vertices(arcs) - {s, t}):
        first = [a for a in arcs if _reaches(arcs, a, v, forward=True)]
        second = [a for a in arcs if _reaches(arcs, a, v, forward=False)]
        if len(first) + len(second) == len(arcs) and not (set(a.id for a in first) & set(a.id for a in second)):
            if first and second:
                if is_series_parallel(first, s, v) and is_series_parallel(second, v, t):
                    return True
    return False


def _reaches(arcs: list[Arc], arc: Arc, v: str, forward: bool) -> bool:
    """forward: arc lies on the s..v side (v reachable from arc.dst or arc.dst == v);
    backward: arc lies on the v..t side (arc.src reachable from v or arc.src == v)."""
    adj: dict[str, list[str]] = {}
    for a in arcs:
        adj.setdefault(a.src, []).append(a.dst)
    if forward:
        start, goal = arc.dst, v
    else:
        start, goal = v, arc.src
    stack = [start]
    seen = set()
    while stack:
        u = stack.pop()
        if u == goal:
            return True
        if u in seen:
            continue
        seen.add(u)
        stack.extend(adj.get(u, []))
    return False


# ---------------------------------------------------------------------------
# naive branching tick simulator


def simulate_branching(score: Score, script, max_ticks: int) -> tuple[list[TraceEvent], bool]:
    """History-scanning re-implementation of the tick engine: activation is
    recomputed every tick from the full transfer log instead of incremental
    counters.  Used to cross-check traces."""
    from .branching import BranchEngine  # graph shape only
    from .conditions import parse_condition
    from .model import Choose, Interp, Wait

    engine = BranchEngine(score)  # reuse only the parsed topology
    spec = engine.spec
    vars_now: dict[str, TV] = {n: TV.UNKNOWN for n in engine.declared}
    log: list[tuple[int, str, str]] = []  # (tick visible, receiver, sender)
    consumed_at: dict[str, list[int]] = {p: [] for p in engine.points}
    active: dict[str, tuple[int, Fraction]] = {}  # interval -> (start tick, remaining)
    activated: set[str] = set(engine.initial)
    trace: list[TraceEvent] = []
    finished = False

    for k in range(max_ticks):
        def emit(kind: str, subject: str, **values) -> None:
            trace.append(TraceEvent(t=Fraction(k), kind=kind, subject=subject, values=values))

        if script:
            vars_now.update(script.assignments_at(k))

        for iv_id in sorted(active):
            start, rem = active[iv_id]
            rem -= 1
            if rem <= 0:
                iv = next(i for i in spec.intervals if i.id == iv_id)
                del active[iv_id]
                emit("ended", iv.id, object=iv.process or iv.id)
                log.append((k + 1, iv.dst, iv.src))
            else:
                active[iv_id] = (start, rem)

        for p in engine.points:
            if p in activated:
                continue
            preds = engine.preds.get(p, set())
            if not preds:
                continue
            last_consumed = consumed_at[p][-1] if consumed_at[p] else -1
            senders = {
                snd for vis, rcv, snd in log if rcv == p and last_consumed < vis <= k
            }
            bp = spec.point(p)
            if (bp.wait is Wait.ALL and len(senders) >= len(preds)) or (
                bp.wait is Wait.FIRST and len(senders) >= 1
            ):
                activated.add(p)
                emit("activated", p, wait=bp.wait.value)

        for p in list(sorted(activated)):
            if p in engine.terminal:
                activated.discard(p)
                emit("finished", p)
                finished = True
                continue
            succ = engine.out.get(p, [])
            passing = []
            for iv in succ:
                value = parse_condition(iv.condition).eval(vars_now, k)
                ok = value is TV.TRUE if iv.interpretation is Interp.WHEN else value is not TV.TRUE
                if ok:
                    passing.append(iv)
            if not passing:
                continue
            bp = spec.point(p)
            chosen = [min(passing, key=lambda iv: iv.id)] if bp.choose is Choose.ONE else passing
            for iv in chosen:
                if iv.id in active:
                    emit("instance-refused", iv.id)
                    continue
                nominal = iv.duration.nominal
                if nominal == INF:
                    nominal = engine.cap
                active[iv.id] = (k, Fraction(nominal))
                emit("started", iv.id, object=iv.process or iv.id)
            activated.discard(p)
            consumed_at[p].append(k)
        if finished:
            return trace, True
    return trace, False
