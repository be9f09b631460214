"""Runtime spreading of trigger-time perturbations.

All arithmetic is exact rational; there are no epsilon tolerances anywhere
in this module.  A positive delta is a delay, a negative one an early
trigger; the early case is the exact symmetric rule (shrink and grow
exchanged, bounds mirrored).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .constraints import PlanLevel, PropagationPlan, SumEquality, Variable
from .model import INF, Behavior, Q


class PropagationError(Exception):
    pass


class InfeasibleDelta(PropagationError):
    """Requested delta exceeds capacity in strict mode."""

    def __init__(self, requested: Fraction, feasible: Fraction):
        super().__init__(f"delta {requested} infeasible; at most {feasible}")
        self.requested = requested
        self.feasible = feasible


class WindowRefused(PropagationError):
    """Trigger time falls outside the feasible window; no state change."""


class NotEnabled(PropagationError):
    """Point is not currently awaited."""


@dataclass
class PropagationState:
    values: dict[str, Fraction]
    fixed: set[str] = field(default_factory=set)
    now: Fraction = Fraction(0)
    times: dict[str, Fraction] = field(default_factory=dict)  # occurred vertices

    def copy(self) -> "PropagationState":
        return PropagationState(dict(self.values), set(self.fixed), self.now, dict(self.times))


@dataclass(frozen=True)
class PropagationResult:
    new_values: dict[str, Fraction]
    shifted_dates: dict[str, Fraction]
    clamped: bool


@dataclass(frozen=True)
class Window:
    earliest: Fraction
    latest: Q

    def contains(self, t: Q) -> bool:
        return self.earliest <= t <= self.latest


def _headroom(var: Variable, value: Fraction, positive: bool) -> Q:
    return (var.hi - value) if positive else value - var.lo


def _single_level_capacity(
    behavior: Behavior,
    eq: SumEquality,
    values: dict[str, Fraction],
    fixed: set[str],
    variables: dict[str, Variable],
    changed: str,
    positive: bool,
    parent_cap: Q | None = None,
) -> Q:
    """How much |delta| on ``changed`` this equality can absorb.

    ``parent_cap`` bounds the adjustment available on the left-hand variable
    (used when the parent cascades into an enclosing equality)."""
    idx = eq.right.index(changed)
    after = [w for w in eq.right[idx + 1 :] if w not in fixed]
    parent = eq.left
    if parent in fixed:
        head: Q = Fraction(0)
    else:
        head = _headroom(variables[parent], values[parent], positive)
    if parent_cap is not None:
        head = min(head, parent_cap)
    # absorbing a delay shrinks later intervals; an early trigger grows them
    rights_cap: Q = Fraction(0)
    for w in after:
        rights_cap += _headroom(variables[w], values[w], not positive)
    if behavior is Behavior.FERMATA:
        return head
    if behavior is Behavior.PROPORTIONAL:
        return rights_cap
    return rights_cap + head


def achievable_delta(
    plan: PropagationPlan,
    values: dict[str, Fraction],
    fixed: set[str],
    variables: dict[str, Variable],
    positive: bool,
) -> Q:
    """Largest |delta| the whole cascade can absorb in one direction."""
    limit: Q | None = None
    for level in reversed(plan.levels):
        absorb = _single_level_capacity(
            level.behavior, level.equality, values, fixed, variables,
            level.changed, positive, parent_cap=limit,
        )
        changed_head = _headroom(variables[level.changed], values[level.changed], positive)
        limit = min(absorb, changed_head)
    if limit is None:
        limit = _headroom(variables[plan.changed], values[plan.changed], positive)
    return limit


def spread(
    behavior: Behavior,
    equality: SumEquality,
    state: PropagationState,
    changed: str,
    delta: Fraction,
    variables: dict[str, Variable],
    *,
    strict: bool = False,
    parent_cap: Q | None = None,
) -> PropagationResult:
    """Re-balance one sum equality after ``changed`` moves by ``delta``."""
    if changed not in equality.right:
        raise PropagationError(f"{changed} does not appear in {equality.render()}")
    values = {v: state.values[v] for v in (equality.left, *equality.right)}
    if delta == 0:
        return PropagationResult(values, {}, False)

    positive = delta > 0
    cap = min(
        _headroom(variables[changed], values[changed], positive),
        _single_level_capacity(
            behavior, equality, values, state.fixed, variables, changed, positive, parent_cap
        ),
    )
    magnitude = abs(delta)
    clamped = magnitude > cap
    if clamped and strict:
        feasible = Fraction(cap) if cap != INF else magnitude
        raise InfeasibleDelta(delta, feasible if positive else -feasible)
    actual = (Fraction(cap) if clamped else magnitude) * (1 if positive else -1)

    idx = equality.right.index(changed)
    after = [w for w in equality.right[idx + 1 :] if w not in state.fixed]
    parent = equality.left
    values[changed] += actual

    if behavior is Behavior.FERMATA:
        values[parent] += actual
    elif behavior is Behavior.CHRONOLOGICAL:
        rem = _absorb_in_order(values, variables, after, actual)
        values[parent] += rem
    elif behavior is Behavior.ANTICHRONOLOGICAL:
        rem = _absorb_parent_first(
            values, variables, state.fixed, parent, after, actual, parent_cap
        )
    else:  # proportional: parent untouched, later intervals rescaled
        _rescale(values, variables, after, -actual)

    total = sum((values[w] for w in equality.right), Fraction(0))
    assert values[parent] == total, f"{equality.render()}: {values[parent]} != {total}"
    return PropagationResult(values, {}, clamped)


def _absorb_in_order(
    values: dict[str, Fraction],
    variables: dict[str, Variable],
    order: list[str],
    delta: Fraction,
) -> Fraction:
    """Shrink (delay) or grow (early) the given intervals in order; returns
    the remainder the parent must take."""
    rem = abs(delta)
    sign = 1 if delta > 0 else -1
    for w in order:
        if rem == 0:
            break
        room = _headroom(variables[w], values[w], positive=delta < 0)
        take = rem if room == INF else min(rem, Fraction(room))
        values[w] -= sign * take
        rem -= take
    return sign * rem


def _absorb_parent_first(
    values: dict[str, Fraction],
    variables: dict[str, Variable],
    fixed: set[str],
    parent: str,
    after: list[str],
    delta: Fraction,
    parent_cap: Q | None = None,
) -> Fraction:
    positive = delta > 0
    if parent in fixed:
        room: Q = Fraction(0)
    else:
        room = _headroom(variables[parent], values[parent], positive)
    if parent_cap is not None:
        room = min(room, parent_cap)
    take = abs(delta) if room == INF else min(abs(delta), Fraction(room))
    sign = 1 if positive else -1
    values[parent] += sign * take
    rest = sign * (abs(delta) - take)
    _absorb_in_order(values, variables, list(reversed(after)), rest)
    return sign * take


def _rescale(
    values: dict[str, Fraction],
    variables: dict[str, Variable],
    group: list[str],
    delta: Fraction,
) -> None:
    """Adjust the group's sum by ``delta``, keeping ratios among unclamped
    members; members hitting a bound are pinned and the rest redistributed
    (deterministic order by variable id)."""
    need = sum((values[w] for w in group), Fraction(0)) + delta
    scalable = sorted(group)
    pinned: dict[str, Fraction] = {}
    for _ in range(len(group) + 1):
        pool = need - sum(pinned.values())
        current = sum((values[w] for w in scalable), Fraction(0))
        repinned = False
        targets: dict[str, Fraction] = {}
        for w in scalable:
            if current == 0:
                share = pool / len(scalable)
            else:
                share = values[w] * pool / current
            var = variables[w]
            if share < var.lo:
                pinned[w] = var.lo
                repinned = True
            elif var.hi != INF and share > var.hi:
                pinned[w] = Fraction(var.hi)
                repinned = True
            else:
                targets[w] = share
        if repinned:
            scalable = [w for w in scalable if w not in pinned]
            continue
        for w, v in targets.items():
            values[w] = v
        for w, v in pinned.items():
            values[w] = v
        return
    raise PropagationError("proportional redistribution did not converge")


def execute_plan(
    plan: PropagationPlan,
    state: PropagationState,
    observed: Fraction,
    variables: dict[str, Variable],
    *,
    strict: bool = False,
    check_window: bool = True,
) -> PropagationResult:
    """Run a compiled plan for an observed trigger time.

    The delta is the difference between ``observed`` and the trigger's
    current expected date (anchor firing time plus the current value of the
    perturbed interval); every equality in the constraint graph holds
    afterwards and fixed variables are untouched."""
    anchor_t = state.times.get(plan.anchor)
    if anchor_t is None:
        raise NotEnabled(f"{plan.trigger}: predecessor {plan.anchor} has not occurred")
    expected = anchor_t + state.values[plan.changed]
    if check_window:
        window = feasible_window_from_plan(plan, state, variables)
        if not window.contains(observed):
            raise WindowRefused(
                f"{plan.trigger}: {observed} outside [{window.earliest}, {window.latest}]"
            )
    delta = observed - expected

    values = dict(state.values)
    clamped = False
    level_delta = delta
    # each level's parent adjustment is capped by what the enclosing levels
    # can still absorb, mirroring the capacity recursion behind the window
    caps: list[Q | None] = []
    limit: Q | None = None
    positive = delta > 0
    for level in reversed(plan.levels):
        caps.append(limit)
        absorb = _single_level_capacity(
            level.behavior, level.equality, state.values, state.fixed, variables,
            level.changed, positive, parent_cap=limit,
        )
        limit = min(absorb, _headroom(variables[level.changed], state.values[level.changed], positive))
    caps.reverse()
    for level, parent_cap in zip(plan.levels, caps):
        if level_delta == 0:
            break
        if level is not plan.levels[0]:
            # the lower level already moved this variable; present the
            # pre-move value so the spread applies the change exactly once
            values[level.changed] -= level_delta
        sub = PropagationState(values, state.fixed, state.now, state.times)
        before_parent = values[level.equality.left]
        res = spread(
            level.behavior, level.equality, sub, level.changed, level_delta, variables,
            strict=strict, parent_cap=parent_cap,
        )
        clamped = clamped or res.clamped
        values.update(res.new_values)
        level_delta = values[level.equality.left] - before_parent

    updated = {v for v in values if values[v] != state.values[v]}
    for arc in plan.secondary:
        src_t = state.times.get(arc.src)
        if src_t is not None:
            values[arc.id] = observed - src_t
            updated.add(arc.id)

    _rebalance_residuals(plan, values, state.fixed, updated)

    shifted = _shifted_dates(plan, values)
    return PropagationResult(values, shifted, clamped)


def _rebalance_residuals(
    plan: PropagationPlan,
    values: dict[str, Fraction],
    fixed: set[str],
    updated: set[str],
) -> None:
    # run until stable: an adjusted variable can feed another residual equality
    for _ in range(len(plan.residuals) + 1):
        dirty = False
        for eq in plan.residuals:
            total = sum((values[w] for w in eq.right), Fraction(0))
            if values[eq.left] == total:
                continue
            if eq.left in updated:
                # the left side carried the perturbation (e.g. a child
                # duration): push the difference into the last free interval
                free = [w for w in reversed(eq.right) if w not in fixed and w not in updated]
                if not free:
                    free = [w for w in reversed(eq.right) if w not in fixed]
                if not free:
                    continue
                values[free[0]] += values[eq.left] - total
                updated.add(free[0])
            else:
                values[eq.left] = total
                updated.add(eq.left)
            dirty = True
        if not dirty:
            return


def _shifted_dates(plan: PropagationPlan, values: dict[str, Fraction]) -> dict[str, Fraction]:
    g = plan.host_graph
    if g is None:
        return {}
    dates: dict[str, Fraction] = {g.alpha: Fraction(0)}
    for v in g.topological_order():
        for a in g.in_arcs(v):
            if a.src in dates and a.id in values:
                candidate = dates[a.src] + values[a.id]
                if v not in dates or candidate > dates[v]:
                    dates[v] = candidate
    return dates


def feasible_window_from_plan(
    plan: PropagationPlan,
    state: PropagationState,
    variables: dict[str, Variable],
) -> Window:
    anchor_t = state.times.get(plan.anchor)
    if anchor_t is None:
        raise NotEnabled(f"{plan.trigger}: predecessor {plan.anchor} has not occurred")
    expected = anchor_t + state.values[plan.changed]
    pos = achievable_delta(plan, state.values, state.fixed, variables, positive=True)
    neg = achievable_delta(plan, state.values, state.fixed, variables, positive=False)
    earliest: Q = expected - neg
    latest: Q = expected + pos
    for arc in plan.secondary:
        src_t = state.times.get(arc.src)
        if src_t is None:
            continue
        earliest = max(earliest, src_t + arc.bounds.lo)
        if arc.bounds.hi != INF:
            latest = min(latest, src_t + arc.bounds.hi)
    if earliest > latest:
        raise PropagationError(
            f"{plan.trigger}: empty feasible window [{earliest}, {latest}]"
        )
    return Window(Fraction(earliest), latest)


def feasible_window(
    point: str,
    state: PropagationState,
    plan: PropagationPlan | None,
    variables: dict[str, Variable] | None = None,
    *,
    static_date: Fraction | None = None,
) -> Window:
    """Feasible trigger window of a currently awaited point.

    Static points degenerate to their (possibly shifted) nominal date."""
    if plan is None:
        if static_date is None:
            raise NotEnabled(f"{point} is static and no nominal date was supplied")
        return Window(static_date, static_date)
    assert variables is not None
    return feasible_window_from_plan(plan, state, variables)
