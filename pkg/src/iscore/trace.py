"""Shared trace-event record and its canonical line format.

One record per line, time-ordered; this rendering is the bit-exact surface
golden tests compare against."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction


@dataclass(frozen=True)
class TraceEvent:
    t: Fraction
    kind: str  # fired | refused | window | started | ended | activated | finished
    subject: str
    mode: str | None = None
    values: dict = field(default_factory=dict)

    def to_line(self) -> str:
        from .model import dump_q

        rec = {"t": dump_q(self.t), "kind": self.kind, "subject": self.subject}
        if self.mode is not None:
            rec["mode"] = self.mode
        if self.values:
            rec["values"] = {
                k: dump_q(v) if isinstance(v, (Fraction, float)) else v
                for k, v in sorted(self.values.items())
            }
        return json.dumps(rec, separators=(",", ":"))


def render_trace(events: list[TraceEvent]) -> str:
    return "".join(ev.to_line() + "\n" for ev in events)
