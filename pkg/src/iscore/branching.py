"""Deterministic tick engine for scores with conditional branching.

Control moves along intervals between points.  A point activates according
to its wait behavior (all predecessors, or the first one), then transfers
control along outgoing intervals whose condition passes, either to all of
them or to a chosen one.  Transfers produced at tick k become visible to
activation at tick k+1; the per-tick fact store is monotone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .conditions import TV, Expr, parse_condition
from .model import (
    INF,
    BranchInterval,
    BranchSpec,
    Choose,
    Interp,
    Score,
    ScoreError,
    Wait,
)
from .trace import TraceEvent


class BranchError(ScoreError):
    pass


@dataclass
class TickStore:
    """Monotone per-tick fact store."""

    clock: int = 0
    transfers: set[tuple[str, str]] = field(default_factory=set)  # (receiver, sender)
    arrived: dict[str, int] = field(default_factory=dict)
    vars: dict[str, TV] = field(default_factory=dict)


@dataclass
class ActiveInterval:
    interval: BranchInterval
    remaining: Fraction
    elapsed: int = 0


@dataclass
class BranchState:
    store: TickStore
    active: dict[str, ActiveInterval] = field(default_factory=dict)
    point_phase: dict[str, str] = field(default_factory=dict)  # awaiting|activated|consumed
    pending_transfers: set[tuple[str, str]] = field(default_factory=set)
    to_reset: set[str] = field(default_factory=set)
    history: list[TraceEvent] = field(default_factory=list)
    finished: bool = False


@dataclass(frozen=True)
class ScriptEntry:
    from_tick: int
    assignments: dict[str, TV]


@dataclass(frozen=True)
class UserScript:
    entries: tuple[ScriptEntry, ...]

    @staticmethod
    def from_json(data: list) -> "UserScript":
        entries = []
        for item in data:
            assigns = {
                name: TV.UNKNOWN if value == "unknown" else (TV.TRUE if value else TV.FALSE)
                for name, value in item.get("set", {}).items()
            }
            entries.append(ScriptEntry(int(item["from_tick"]), assigns))
        return UserScript(tuple(sorted(entries, key=lambda e: e.from_tick)))

    def assignments_at(self, tick: int) -> dict[str, TV]:
        out: dict[str, TV] = {}
        for entry in self.entries:
            if entry.from_tick <= tick:
                out.update(entry.assignments)
        return out


def evaluate_condition(expr: Expr | str, store: TickStore, interp: Interp) -> bool:
    """when passes on a deducibly true condition; unless passes when the
    condition is false or cannot be deduced."""
    if isinstance(expr, str):
        expr = parse_condition(expr)
    value = expr.eval(store.vars, store.clock)
    if interp is Interp.WHEN:
        return value is TV.TRUE
    return value is not TV.TRUE


class ChoicePolicy:
    """Resolves choose=one among passing successors."""

    def pick(self, passing: list[BranchInterval]) -> BranchInterval:
        return min(passing, key=lambda iv: iv.id)


class SeededRandomChoice(ChoicePolicy):
    def __init__(self, seed: int):
        self._rng = random.Random(seed)

    def pick(self, passing: list[BranchInterval]) -> BranchInterval:
        return self._rng.choice(sorted(passing, key=lambda iv: iv.id))


class BranchEngine:
    def __init__(self, score: Score, policy: ChoicePolicy | None = None):
        if score.branching is None:
            raise BranchError("score has no branching specification")
        self.spec: BranchSpec = score.branching
        self.policy = policy or ChoicePolicy()
        self.cap = Fraction(score.infinity_cap) if score.infinity_cap is not None else Fraction(10**6)
        self.declared = tuple(score.variables)
        self.exprs: dict[str, Expr] = {
            iv.id: parse_condition(iv.condition) for iv in self.spec.intervals
        }
        self.out: dict[str, list[BranchInterval]] = {}
        self.preds: dict[str, set[str]] = {}
        points: set[str] = set()
        for iv in self.spec.intervals:
            points.add(iv.src)
            points.add(iv.dst)
            self.out.setdefault(iv.src, []).append(iv)
            self.preds.setdefault(iv.dst, set()).add(iv.src)
        for lst in self.out.values():
            lst.sort(key=lambda iv: iv.id)
        self.points = sorted(points)
        self.initial = sorted(p for p in points if p not in self.preds)
        if not self.initial and self.spec.intervals:
            # every point has a predecessor (a loop closes the graph);
            # execution begins at the first interval's start in document order
            self.initial = [self.spec.intervals[0].src]
        self.terminal = sorted(p for p in points if p not in self.out)

    def initial_state(self) -> BranchState:
        store = TickStore(vars={name: TV.UNKNOWN for name in self.declared})
        state = BranchState(store=store)
        for p in self.points:
            state.point_phase[p] = "awaiting"
        for p in self.initial:
            state.point_phase[p] = "activated"
        return state

    def tick(
        self,
        state: BranchState,
        inputs: dict[str, TV] | None = None,
        triggers: set[str] = frozenset(),
    ) -> list[TraceEvent]:
        """Advance one tick; returns the events it produced (also appended to
        the state history)."""
        store = state.store
        k = store.clock
        events: list[TraceEvent] = []

        def emit(kind: str, subject: str, **values) -> None:
            ev = TraceEvent(t=Fraction(k), kind=kind, subject=subject, values=values)
            events.append(ev)
            state.history.append(ev)

        # consumed points reset between ticks so the store stays monotone
        # within a tick; loops re-arm them here
        for p in sorted(state.to_reset):
            state.point_phase[p] = "awaiting"
            store.arrived[p] = 0
            for sender in self.preds.get(p, set()):
                store.transfers.discard((p, sender))
        state.to_reset.clear()

        # transfers from the previous tick become visible now
        for receiver, sender in sorted(state.pending_transfers):
            if (receiver, sender) not in store.transfers:
                store.transfers.add((receiver, sender))
                store.arrived[receiver] = store.arrived.get(receiver, 0) + 1
        state.pending_transfers.clear()

        # (1) variable assignments
        for name, value in sorted((inputs or {}).items()):
            if name not in store.vars:
                raise BranchError(f"undeclared variable {name!r}")
            store.vars[name] = value

        # live early end of an interval within its duration range
        for pid in sorted(triggers):
            for iv_id, act in sorted(state.active.items()):
                if act.interval.dst == pid and act.elapsed >= act.interval.duration.lo:
                    act.remaining = Fraction(0)

        # (2) running intervals progress; finished ones transfer control
        for iv_id in sorted(state.active):
            act = state.active[iv_id]
            act.remaining -= 1
            act.elapsed += 1
            if act.remaining <= 0:
                iv = act.interval
                del state.active[iv_id]
                emit("ended", iv.id, object=iv.process or iv.id)
                state.pending_transfers.add((iv.dst, iv.src))

        # (3) point activation from facts visible this tick
        for p in self.points:
            if state.point_phase[p] != "awaiting":
                continue
            preds = self.preds.get(p, set())
            arrived = store.arrived.get(p, 0)
            bp = self.spec.point(p)
            if not preds:
                continue
            if bp.wait is Wait.ALL and arrived >= len(preds):
                state.point_phase[p] = "activated"
                emit("activated", p, wait=bp.wait.value)
            elif bp.wait is Wait.FIRST and arrived >= 1:
                state.point_phase[p] = "activated"
                emit("activated", p, wait=bp.wait.value)

        # (4)+(5) activated points start outgoing intervals whose condition passes
        for p in self.points:
            if state.point_phase[p] != "activated":
                continue
            if p in self.terminal:
                state.point_phase[p] = "consumed"
                state.finished = True
                emit("finished", p)
                continue
            succ = self.out.get(p, [])
            passing = [
                iv for iv in succ
                if evaluate_condition(self.exprs[iv.id], store, iv.interpretation)
            ]
            if not passing:
                continue  # stays activated, retries next tick
            bp = self.spec.point(p)
            chosen = [self.policy.pick(passing)] if bp.choose is Choose.ONE else passing
            for iv in chosen:
                if iv.id in state.active:
                    emit("instance-refused", iv.id)
                    continue
                nominal = iv.duration.nominal
                if nominal == INF:
                    nominal = self.cap
                state.active[iv.id] = ActiveInterval(iv, Fraction(nominal))
                emit("started", iv.id, object=iv.process or iv.id)
            state.point_phase[p] = "consumed"
            # a consumed point can be re-armed by a later transfer (loops)
            state.to_reset.add(p)

        # (6) the clock ticks forever
        store.clock += 1
        return events

    def run(
        self,
        script: UserScript | None = None,
        max_ticks: int = 1000,
    ) -> tuple[list[TraceEvent], bool]:
        """Tick until the terminal point activates or the budget runs out.

        Returns (trace, completed)."""
        state = self.initial_state()
        for _ in range(max_ticks):
            inputs = script.assignments_at(state.store.clock) if script else None
            self.tick(state, inputs)
            if state.finished:
                return state.history, True
        return state.history, False
