"""Trigger-to-fire latency benchmark on a synthetic branching chain."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from fractions import Fraction

from .branching import BranchEngine
from .model import (
    BranchInterval,
    BranchPoint,
    BranchSpec,
    ControlPoint,
    Interp,
    IntervalSpec,
    Kind,
    PointKind,
    Role,
    Score,
    TemporalObject,
    Wait,
    Choose,
)


@dataclass(frozen=True)
class BenchReport:
    objects: int
    trials: int
    latencies_us: tuple[float, ...]
    median_us: float
    p99_us: float

    def render(self) -> str:
        return (
            f"objects={self.objects} trials={self.trials} "
            f"median={self.median_us / 1000:.3f}ms p99={self.p99_us / 1000:.3f}ms"
        )


def chain_score(objects: int) -> Score:
    """A linear branching run of ``objects`` intervals, each an early-endable
    timed process."""
    points = tuple(
        BranchPoint(f"q{i:04d}", Wait.FIRST, Choose.ALL) for i in range(objects + 1)
    )
    intervals = tuple(
        BranchInterval(
            id=f"c{i:04d}",
            src=f"q{i:04d}",
            dst=f"q{i + 1:04d}",
            condition="",
            interpretation=Interp.WHEN,
            duration=IntervalSpec(Fraction(1), Fraction(2), Fraction(5)),
            process=f"proc{i}",
        )
        for i in range(objects)
    )
    root = TemporalObject(
        id="chain",
        kind=Kind.STRUCTURE,
        duration=IntervalSpec(Fraction(0), Fraction(0), Fraction(0)),
        points=(
            ControlPoint("chainStart", "chain", Role.START, PointKind.STATIC, Fraction(0)),
            ControlPoint("chainEnd", "chain", Role.END, PointKind.STATIC, Fraction(0)),
        ),
        behavior=None,
    )
    # the root structure needs a behavior to validate; fermata is neutral here
    from .model import Behavior
    from dataclasses import replace

    root = replace(root, behavior=Behavior.FERMATA)
    return Score(
        version="1",
        root=root,
        variables=(),
        infinity_cap=Fraction(10**6),
        branching=BranchSpec(points=points, intervals=intervals),
    )


def bench(objects: int = 500, trials: int = 100) -> BenchReport:
    """Measure the wall time of the tick that receives a live early-end
    trigger on the first interval and emits its events."""
    if objects < 1 or trials < 1:
        raise ValueError("objects and trials must be >= 1")
    score = chain_score(objects)
    engine = BranchEngine(score)
    latencies: list[float] = []
    for _ in range(trials):
        state = engine.initial_state()
        engine.tick(state)  # c0000 starts
        engine.tick(state)  # elapsed reaches its minimum duration
        t0 = time.perf_counter_ns()
        events = engine.tick(state, triggers={"q0001"})
        t1 = time.perf_counter_ns()
        assert any(e.kind == "ended" for e in events)
        latencies.append((t1 - t0) / 1000.0)
    lat = sorted(latencies)
    return BenchReport(
        objects=objects,
        trials=trials,
        latencies_us=tuple(latencies),
        median_us=statistics.median(lat),
        p99_us=lat[min(len(lat) - 1, int(len(lat) * 0.99))],
    )
