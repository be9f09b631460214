"""Deterministic textual renderings of the compiler's intermediate stages.

These feed the command line's ``--emit`` switch and the golden tests;
everything is sorted so identical inputs always print identical text.
"""

from __future__ import annotations

from .compiler import CompiledScore
from .model import dump_q
from .petri import flatten

STAGES = ("graph", "sp", "constraints", "petri", "plans")


def _bounds(lo, nominal, hi) -> str:
    return f"[{dump_q(lo)},{dump_q(hi)}] nominal={dump_q(nominal)}"


def emit_graph(compiled: CompiledScore) -> str:
    lines: list[str] = []
    for sid in sorted(compiled.structures):
        g = compiled.structures[sid].graph
        lines.append(f"graph {sid} alpha={g.alpha} beta={g.beta}")
        for vid in sorted(g.vertices):
            v = g.vertices[vid]
            labels = ",".join(
                f"{pid}:{role.value}:{kind.value}" for pid, role, kind in sorted(v.labels)
            )
            dyn = " dynamic" if v.dynamic else ""
            lines.append(f"  vertex {vid} [{labels}]{dyn}")
        for a in g.arcs:
            b = a.bounds
            lines.append(f"  arc {a.id}: {a.src} -> {a.dst} {_bounds(b.lo, b.nominal, b.hi)}")
    return "\n".join(lines) + "\n"


def emit_sp(compiled: CompiledScore) -> str:
    lines: list[str] = []
    for sid in sorted(compiled.structures):
        sp = compiled.structures[sid].sp
        lines.append(f"sp {sid} vertices={len(sp.vertices)} arcs={len(sp.arcs)}")
        lines.append(f"  decomposition {sp.decomposition.render()}")
        for a in sorted(sp.residual, key=lambda x: x.id):
            lines.append(f"  residual {a.id}")
    return "\n".join(lines) + "\n"


def emit_constraints(compiled: CompiledScore) -> str:
    lines: list[str] = []
    for sid in sorted(compiled.structures):
        cg = compiled.structures[sid].constraints
        lines.append(f"constraints {sid}")
        for name in sorted(cg.variables):
            v = cg.variables[name]
            lines.append(f"  var {name} {_bounds(v.lo, v.nominal, v.hi)}")
        for eq in cg.constraints:
            lines.append(f"  eq {eq.render()}")
    return "\n".join(lines) + "\n"


def emit_petri(compiled: CompiledScore) -> str:
    lines: list[str] = []
    for net in compiled.petri.walk():
        lines.append(f"net {net.structure}")
        for tid in sorted(net.transitions):
            t = net.transitions[tid]
            dyn = " dynamic" if t.dynamic else ""
            lines.append(f"  transition {tid} points={','.join(sorted(t.points))}{dyn}")
        for pid in sorted(net.places):
            p = net.places[pid]
            lines.append(
                f"  place {pid} {p.input} -> {p.output} var={p.interval_variable} "
                f"range=[{dump_q(p.range_lo)},{dump_q(p.range_hi)}] nominal={dump_q(p.nominal)}"
            )
    transitions, places = flatten(compiled.petri)
    lines.append(f"flat transitions={len(transitions)} places={len(places)}")
    return "\n".join(lines) + "\n"


def emit_plans(compiled: CompiledScore) -> str:
    lines: list[str] = []
    for pid in sorted(compiled.plans):
        plan = compiled.plans[pid]
        lines.append(f"plan {pid} changed={plan.changed} anchor={plan.anchor}")
        for lv in plan.levels:
            lines.append(
                f"  level {lv.structure} {lv.behavior.value}: {lv.equality.render()} "
                f"(changed {lv.changed})"
            )
        for act in plan.actions:
            lines.append(f"  action {act.render()}")
        for src, dst in plan.orientation:
            lines.append(f"  orient {src} >> {dst}")
        for eq in plan.residuals:
            lines.append(f"  residual {eq.render()}")
        for arc in plan.secondary:
            lines.append(f"  secondary {arc.id}")
    return "\n".join(lines) + "\n" if lines else "no dynamic points\n"


_EMITTERS = {
    "graph": emit_graph,
    "sp": emit_sp,
    "constraints": emit_constraints,
    "petri": emit_petri,
    "plans": emit_plans,
}


def emit(compiled: CompiledScore, stage: str) -> str:
    try:
        fn = _EMITTERS[stage]
    except KeyError:
        raise ValueError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
    return fn(compiled)
