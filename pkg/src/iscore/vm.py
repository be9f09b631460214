"""Execution of a compiled score under a virtual or real clock.

The runtime state is a marking over the flattened net: one token per place
(event-graph arc), firing times per transition (vertex).  Static
transitions fire when every input token has aged to its arc's nominal;
dynamic ones wait for a user trigger inside their feasible window and fire
automatically when the window closes.  Perturbations run through the
compiled propagation plans, which rewrite downstream nominals.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from fractions import Fraction

from .compiler import CompiledScore
from .model import INF, PointKind, Q, Role, ScoreError
from .propagate import (
    NotEnabled,
    PropagationState,
    Window,
    WindowRefused,
    execute_plan,
    feasible_window_from_plan,
)
from .trace import TraceEvent


class VmError(ScoreError):
    pass


@dataclass(frozen=True)
class VmCommand:
    kind: str  # "trigger" | "stop"
    at: Fraction
    transition: str | None = None


@dataclass
class Marking:
    tokens: dict[str, Fraction] = field(default_factory=dict)  # arc id -> arrival
    fired_at: dict[str, Fraction] = field(default_factory=dict)
    now: Fraction = Fraction(0)


class Vm:
    def __init__(self, compiled: CompiledScore):
        self.compiled = compiled
        self.graph = compiled.flat
        self.variables = compiled.constraints.variables
        self.owners = {p.id: p.owner for p in compiled.score.points().values()}
        self.marking = Marking()
        self.values: dict[str, Fraction] = {
            name: var.nominal for name, var in self.variables.items()
        }
        self.fixed: set[str] = set()
        self.trace: list[TraceEvent] = []
        self.stopped = False
        self._last_window: dict[str, Window] = {}
        self._in = {v: tuple(self.graph.in_arcs(v)) for v in self.graph.vertices}
        self._out = {v: tuple(self.graph.out_arcs(v)) for v in self.graph.vertices}

    # -- state inspection ---------------------------------------------------

    def _prop_state(self) -> PropagationState:
        return PropagationState(
            values=self.values,
            fixed=self.fixed,
            now=self.marking.now,
            times=self.marking.fired_at,
        )

    def _enabled(self, v: str) -> bool:
        if v in self.marking.fired_at:
            return False
        arcs = self._in[v]
        return all(a.id in self.marking.tokens for a in arcs)

    def _is_dynamic(self, v: str) -> bool:
        return self.graph.vertices[v].dynamic

    def _static_fire_time(self, v: str) -> Fraction:
        arcs = self._in[v]
        if not arcs:
            return Fraction(0)
        return max(self.marking.tokens[a.id] + self.values[a.id] for a in arcs)

    def window_of(self, v: str) -> Window:
        plan = self.compiled.plans.get(v)
        if plan is None:
            t = self._static_fire_time(v)
            return Window(t, t)
        return feasible_window_from_plan(plan, self._prop_state(), self.variables)

    # -- events -------------------------------------------------------------

    def _emit(self, t: Fraction, kind: str, subject: str, mode: str | None = None, **values):
        self.trace.append(TraceEvent(t=t, kind=kind, subject=subject, mode=mode, values=values))

    def _emit_windows(self) -> None:
        for v in sorted(self.graph.vertices):
            if not self._is_dynamic(v) or not self._enabled(v):
                continue
            try:
                w = self.window_of(v)
            except NotEnabled:
                continue
            if self._last_window.get(v) != w:
                self._last_window[v] = w
                self._emit(
                    self.marking.now, "window", v,
                    earliest=w.earliest, latest=w.latest,
                )

    # -- firing -------------------------------------------------------------

    def _fire(self, v: str, at: Fraction, mode: str, **extra) -> None:
        for arc in self._in[v]:
            arrival = self.marking.tokens.pop(arc.id)
            elapsed = at - arrival
            if not (arc.bounds.lo <= elapsed <= arc.bounds.hi):
                raise VmError(
                    f"quantitative violation firing {v}: {arc.id} elapsed {elapsed} "
                    f"outside [{arc.bounds.lo}, {arc.bounds.hi}]"
                )
            self.values[arc.id] = elapsed
            self.fixed.add(arc.id)
        self.marking.fired_at[v] = at
        for arc in self._out[v]:
            self.marking.tokens[arc.id] = at
        self._emit(at, "fired", v, mode=mode, **extra)
        started = sorted(
            self.owners[pid] for pid, role, _ in self.graph.vertices[v].labels
            if role is Role.START
        )
        ended = sorted(
            self.owners[pid] for pid, role, _ in self.graph.vertices[v].labels
            if role is Role.END
        )
        for obj in started:
            self._emit(at, "started", obj)
        for obj in ended:
            self._emit(at, "ended", obj)

    def _trigger(self, v: str, at: Fraction) -> None:
        if v not in self.graph.vertices:
            raise VmError(f"unknown transition {v!r}")
        if not self._is_dynamic(v):
            raise VmError(f"{v} is a static transition")
        if not self._enabled(v):
            self._emit(at, "refused", v, mode="refused", reason="not_enabled")
            return
        plan = self.compiled.plans.get(v)
        if plan is None:
            self._fire(v, at, "user")
            return
        try:
            result = execute_plan(plan, self._prop_state(), at, self.variables)
        except WindowRefused:
            w = self._last_window.get(v)
            reason = "before_window" if w is not None and at < w.earliest else "after_window"
            self._emit(at, "refused", v, mode="refused", reason=reason)
            return
        for name, value in result.new_values.items():
            if name not in self.fixed:
                self.values[name] = value
        self._fire(v, at, "user")

    def _auto_fire(self, v: str, at: Fraction) -> None:
        plan = self.compiled.plans.get(v)
        if plan is not None:
            result = execute_plan(
                plan, self._prop_state(), at, self.variables, check_window=False
            )
            for name, value in result.new_values.items():
                if name not in self.fixed:
                    self.values[name] = value
        self._fire(v, at, "auto")

    # -- stepping -----------------------------------------------------------

    def _next_deadline(self) -> Q:
        best: Q = INF
        for v in sorted(self.graph.vertices):
            if not self._enabled(v):
                continue
            if self._is_dynamic(v):
                try:
                    w = self.window_of(v)
                except NotEnabled:
                    continue
                if w.latest != INF:
                    best = min(best, w.latest)
            else:
                best = min(best, self._static_fire_time(v))
        return best

    def _fire_due(self, t: Fraction) -> None:
        # statics first (repeat: firing enables successors), then autos,
        # deterministic lexicographic order inside each class
        progress = True
        while progress:
            progress = False
            for v in sorted(self.graph.vertices):
                if self._enabled(v) and not self._is_dynamic(v) and self._static_fire_time(v) <= t:
                    self._fire(v, max(self._static_fire_time(v), Fraction(0)), "static")
                    progress = True
            for v in sorted(self.graph.vertices):
                if not (self._enabled(v) and self._is_dynamic(v)):
                    continue
                try:
                    w = self.window_of(v)
                except NotEnabled:
                    continue
                if w.latest != INF and w.latest <= t:
                    self._auto_fire(v, Fraction(w.latest))
                    progress = True
        self._emit_windows()

    def step(self, until: Fraction, commands: list[VmCommand] | None = None) -> list[TraceEvent]:
        """Advance to ``until`` processing due firings and timestamped
        commands in order; returns the events emitted."""
        if until < self.marking.now:
            raise VmError("cannot step backwards")
        mark = len(self.trace)
        queue = sorted(commands or [], key=lambda c: c.at)
        for c in queue:
            if not (self.marking.now <= c.at <= until):
                raise VmError(f"command at {c.at} outside ({self.marking.now}, {until}]")
        self._fire_due(self.marking.now)
        while not self.stopped:
            deadline = self._next_deadline()
            cmd_t = queue[0].at if queue else INF
            t = min(deadline, cmd_t)
            if t == INF or t > until:
                self.marking.now = until
                break
            self.marking.now = Fraction(t)
            # user commands at t run before the deadline firings at t: at the
            # window edge the musician's trigger wins over the auto fire
            while queue and queue[0].at <= t:
                cmd = queue.pop(0)
                if cmd.kind == "stop":
                    self.stopped = True
                elif cmd.kind == "trigger":
                    assert cmd.transition is not None
                    self._trigger(cmd.transition, cmd.at)
                else:
                    raise VmError(f"unknown command kind {cmd.kind!r}")
            self._fire_due(self.marking.now)
            if self.graph.beta in self.marking.fired_at:
                break
        return self.trace[mark:]

    @property
    def complete(self) -> bool:
        return self.graph.beta in self.marking.fired_at


def nominal_state(compiled: CompiledScore) -> PropagationState:
    """Propagation state of the written schedule: every vertex timed at its
    earliest nominal date, nothing elapsed yet."""
    times: dict[str, Fraction] = {}
    g = compiled.flat
    for v in g.topological_order():
        arcs = g.in_arcs(v)
        if not arcs:
            times[v] = Fraction(0)
        else:
            times[v] = max(times[a.src] + a.bounds.nominal for a in arcs)
    values = {n: var.nominal for n, var in compiled.constraints.variables.items()}
    return PropagationState(values=values, fixed=set(), now=Fraction(0), times=times)


def init(compiled: CompiledScore) -> Vm:
    vm = Vm(compiled)
    if not vm.graph.vertices:
        raise VmError("degenerate net with no transitions")
    return vm


def run_to_completion(
    compiled: CompiledScore,
    clock: str = "virtual",
    tick_ms: float = 10.0,
    script: list[VmCommand] | None = None,
    horizon: Q = Fraction(10**6),
    budget: int = 100_000,
) -> tuple[list[TraceEvent], bool]:
    """Run until the root end transition fires, the horizon is reached or the
    budget is exhausted.  The virtual clock jumps to the next deadline or
    command; the real clock sleeps through each tick."""
    vm = init(compiled)
    script = sorted(script or [], key=lambda c: c.at)
    if clock == "virtual":
        last = max((c.at for c in script), default=Fraction(0))
        vm.step(Fraction(max(last, 0)), script)
        for _ in range(budget):
            if vm.complete or vm.stopped:
                break
            before = vm.marking.now
            deadline = vm._next_deadline()
            if deadline == INF or deadline > horizon:
                break
            vm.step(Fraction(deadline))
            if vm.marking.now == before and not vm.complete:
                break
        return vm.trace, vm.complete
    # real clock: one-tick granularity, sleeping between ticks
    pending = list(script)
    for _ in range(budget):
        if vm.complete or vm.stopped:
            break
        nxt = vm.marking.now + 1
        if nxt > horizon:
            break
        due = [c for c in pending if c.at <= nxt]
        pending = [c for c in pending if c.at > nxt]
        _time.sleep(tick_ms / 1000.0)
        vm.step(nxt, due)
        if not pending and vm._next_deadline() == INF:
            break
    return vm.trace, vm.complete
