"""WebSocket session service.

One connection is one session.  The client loads a score, starts an engine
(timed net when the score has no branching section, tick engine otherwise)
and then drives it with trigger/set/step messages; every engine event is
pushed back as a wire message as soon as it is produced.
"""

from __future__ import annotations

import asyncio
import json
from fractions import Fraction

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .branching import BranchEngine, BranchError, BranchState
from .compiler import CompiledScore, compile_score
from .conditions import TV
from .model import INF, ParseError, ScoreError, dump_q, parse_score, validate
from .trace import TraceEvent
from .vm import Vm, VmError, init as vm_init

app = FastAPI(title="interactive score sessions")


def wire_message(ev: TraceEvent) -> dict | None:
    t = dump_q(ev.t)
    if ev.kind == "fired":
        return {"type": "fired", "point": ev.subject, "t": t, "mode": ev.mode}
    if ev.kind in ("refused", "instance-refused"):
        reason = ev.values.get("reason", "already_active")
        return {"type": "refused", "point": ev.subject, "t": t, "reason": reason}
    if ev.kind == "window":
        return {
            "type": "window",
            "point": ev.subject,
            "earliest": dump_q(ev.values["earliest"]),
            "latest": dump_q(ev.values["latest"]),
        }
    if ev.kind in ("started", "ended"):
        return {"type": ev.kind, "object": ev.values.get("object", ev.subject), "t": t}
    if ev.kind == "finished":
        return {"type": "finished", "t": t}
    return None  # activation bookkeeping stays internal


class Session:
    """State machine behind one connection."""

    def __init__(self) -> None:
        self.score = None
        self.compiled: CompiledScore | None = None
        self.vm: Vm | None = None
        self.engine: BranchEngine | None = None
        self.bstate: BranchState | None = None
        self.pending_inputs: dict[str, TV] = {}
        self.pending_triggers: set[str] = set()
        self.tick_ms = 10.0
        self.clock = "virtual"
        self.trace: list[TraceEvent] = []

    # each handler returns the wire messages to push

    def handle(self, msg: dict) -> list[dict]:
        kind = msg.get("type")
        handlers = {
            "load": self._load,
            "start": self._start,
            "trigger": self._trigger,
            "set": self._set,
            "step": self._step,
            "stop": self._stop,
        }
        handler = handlers.get(kind)
        if handler is None:
            return [{"type": "error", "message": f"unknown message type {kind!r}"}]
        try:
            return handler(msg)
        except (ScoreError, VmError, BranchError, KeyError, ValueError) as exc:
            return [{"type": "error", "message": str(exc)}]

    def _load(self, msg: dict) -> list[dict]:
        try:
            score = parse_score(json.dumps(msg["score"]))
        except ParseError as exc:
            return [{"type": "error", "message": str(exc)}]
        violations = validate(score)
        if violations:
            return [{"type": "error", "message": "; ".join(str(v) for v in violations)}]
        self.score = score
        self.compiled = None
        self.vm = None
        self.engine = None
        self.bstate = None
        self.trace = []
        return [{"type": "loaded", "warnings": []}]

    def _start(self, msg: dict) -> list[dict]:
        if self.score is None:
            return [{"type": "error", "message": "no score loaded"}]
        self.clock = msg.get("clock", "virtual")
        self.tick_ms = float(msg.get("tick_ms", 10))
        if self.score.branching is not None:
            self.engine = BranchEngine(self.score)
            self.bstate = self.engine.initial_state()
            return []
        self.compiled = compile_score(self.score, validated=True)
        self.vm = vm_init(self.compiled)
        events = self.vm.step(Fraction(0))
        return self._push(events)

    def _trigger(self, msg: dict) -> list[dict]:
        point = str(msg["point"])
        if self.vm is not None:
            mark = len(self.vm.trace)
            self.vm._trigger(point, self.vm.marking.now)
            self.vm._fire_due(self.vm.marking.now)
            return self._push(self.vm.trace[mark:])
        if self.engine is not None:
            self.pending_triggers.add(point)
            return []
        return [{"type": "error", "message": "no engine running"}]

    def _set(self, msg: dict) -> list[dict]:
        if self.engine is None or self.bstate is None:
            return [{"type": "error", "message": "variables need a branching session"}]
        name = str(msg["var"])
        if name not in self.bstate.store.vars:
            return [{"type": "error", "message": f"undeclared variable {name!r}"}]
        value = msg["value"]
        self.pending_inputs[name] = (
            TV.UNKNOWN if value == "unknown" else (TV.TRUE if value else TV.FALSE)
        )
        return []

    def _step(self, msg: dict) -> list[dict]:
        ticks = int(msg.get("ticks", 1))
        if ticks < 0:
            return [{"type": "error", "message": "ticks must be >= 0"}]
        if self.vm is not None:
            events = self.vm.step(self.vm.marking.now + ticks)
            return self._push(events)
        if self.engine is not None and self.bstate is not None:
            out: list[dict] = []
            for _ in range(ticks):
                inputs, self.pending_inputs = self.pending_inputs, {}
                triggers, self.pending_triggers = self.pending_triggers, set()
                events = self.engine.tick(self.bstate, inputs, triggers)
                out.extend(self._push(events))
                if self.bstate.finished:
                    break
            return out
        return [{"type": "error", "message": "no engine running"}]

    def _stop(self, msg: dict) -> list[dict]:
        self.vm = None
        self.engine = None
        self.bstate = None
        return []

    def _push(self, events: list[TraceEvent]) -> list[dict]:
        self.trace.extend(events)
        out = []
        for ev in events:
            wire = wire_message(ev)
            if wire is not None:
                out.append(wire)
        return out


@app.websocket("/ws")
async def session_socket(ws: WebSocket) -> None:
    await ws.accept()
    session = Session()
    lock = asyncio.Lock()
    ticker: asyncio.Task | None = None

    async def tick_forever() -> None:
        # a real-clock session advances by itself between client messages
        while session.vm is not None or session.engine is not None:
            await asyncio.sleep(session.tick_ms / 1000.0)
            async with lock:
                if session.vm is None and session.engine is None:
                    break
                for reply in session.handle({"type": "step", "ticks": 1}):
                    await ws.send_text(json.dumps(reply))
                if session.bstate is not None and session.bstate.finished:
                    break
                if session.vm is not None and session.vm.complete:
                    break

    try:
        while True:
            raw = await ws.receive_text()
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError as exc:
                await ws.send_text(json.dumps({"type": "error", "message": exc.msg}))
                continue
            async with lock:
                for reply in session.handle(msg):
                    await ws.send_text(json.dumps(reply))
            if (
                session.clock == "real"
                and (session.vm is not None or session.engine is not None)
                and (ticker is None or ticker.done())
            ):
                ticker = asyncio.create_task(tick_forever())
    except WebSocketDisconnect:
        pass
    finally:
        if ticker is not None:
            ticker.cancel()
