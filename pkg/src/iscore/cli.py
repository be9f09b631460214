"""Command line front end: validate, compile, run, window, oracle, bench, serve."""

from __future__ import annotations

import json
import sys
from fractions import Fraction

import click

from .branching import BranchEngine, UserScript
from .compiler import CompiledScore, compile_score
from .emit import STAGES, emit
from .model import INF, ParseError, ScoreError, dump_q, parse_q, parse_score, validate
from .oracle import brute_force_window, enumerate_assignments
from .propagate import feasible_window
from .trace import render_trace
from .vm import VmCommand, nominal_state, run_to_completion


def _load(path: str):
    try:
        with open(path) as fh:
            return parse_score(fh.read())
    except OSError as exc:
        raise click.ClickException(str(exc))
    except ParseError as exc:
        raise click.ClickException(f"parse error: {exc}")


def _compile(score) -> CompiledScore:
    violations = validate(score)
    if violations:
        for v in violations:
            click.echo(str(v), err=True)
        raise click.ClickException("score is invalid")
    return compile_score(score, validated=True)


@click.group()
def main() -> None:
    """Compiler and runtime for interactive scores."""


@main.command("validate")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def validate_cmd(file: str) -> None:
    """Check a score document against every model invariant."""
    score = _load(file)
    violations = validate(score)
    for v in violations:
        click.echo(str(v))
    if violations:
        sys.exit(1)
    click.echo("ok")


@main.command("compile")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--emit", "stages", type=click.Choice(STAGES), multiple=True,
              default=("constraints",), help="Intermediate stage(s) to print.")
def compile_cmd(file: str, stages: tuple[str, ...]) -> None:
    """Compile a score and print the requested intermediate stages."""
    compiled = _compile(_load(file))
    for stage in stages:
        click.echo(emit(compiled, stage), nl=False)


def _petri_script(path: str) -> list[VmCommand]:
    with open(path) as fh:
        entries = json.load(fh)
    out = []
    for e in entries:
        at = parse_q(e["at"], "script.at")
        if e.get("stop"):
            out.append(VmCommand("stop", at))
        else:
            out.append(VmCommand("trigger", at, str(e["trigger"])))
    return out


@main.command("run")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--engine", type=click.Choice(["petri", "branching"]), default=None,
              help="Defaults to branching when the score has a branching section.")
@click.option("--clock", type=click.Choice(["virtual", "real"]), default="virtual")
@click.option("--tick-ms", type=float, default=10.0)
@click.option("--script", "script_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False))
@click.option("--max-ticks", type=int, default=1000)
def run_cmd(file, engine, clock, tick_ms, script_path, trace_path, max_ticks) -> None:
    """Execute a score and print (or record) its event trace."""
    score = _load(file)
    if engine is None:
        engine = "branching" if score.branching is not None else "petri"
    if engine == "branching":
        if score.branching is None:
            raise click.ClickException("score has no branching section")
        user = UserScript.from_json(json.load(open(script_path))) if script_path else None
        trace, done = BranchEngine(score).run(user, max_ticks=max_ticks)
    else:
        compiled = _compile(score)
        commands = _petri_script(script_path) if script_path else []
        trace, done = run_to_completion(
            compiled, clock=clock, tick_ms=tick_ms, script=commands,
            horizon=Fraction(max_ticks), budget=max(max_ticks * 10, 1000),
        )
    text = render_trace(trace)
    if trace_path:
        with open(trace_path, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    if not done:
        click.echo("incomplete", err=True)
        sys.exit(2)


@main.command("window")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--point", required=True)
def window_cmd(file: str, point: str) -> None:
    """Feasible trigger window of a point under the written schedule."""
    compiled = _compile(_load(file))
    if point not in compiled.score.points():
        raise click.ClickException(f"unknown point {point!r}")
    state = nominal_state(compiled)
    plan = compiled.plans.get(point)
    w = feasible_window(point, state, plan, compiled.constraints.variables,
                        static_date=compiled.score.points()[point].date)
    click.echo(f"earliest={dump_q(w.earliest)} latest={dump_q(w.latest)}")


@main.command("oracle")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--point", help="Brute-force the window of this point.")
@click.option("--enumerate", "enum", is_flag=True, help="Count grid solutions.")
@click.option("--step", default="1")
@click.option("--cap", default="20")
def oracle_cmd(file, point, enum, step, cap) -> None:
    """Run the naive reference computations (debugging aid)."""
    compiled = _compile(_load(file))
    step_q = parse_q(step, "step")
    cap_q = parse_q(cap, "cap")
    if enum:
        sols = enumerate_assignments(compiled.constraints, step=step_q, cap=cap_q)
        click.echo(f"solutions={len(sols)}")
    if point:
        w = brute_force_window(compiled, point, nominal_state(compiled),
                               step=step_q, scan_cap=cap_q)
        click.echo(f"earliest={dump_q(w.earliest)} latest={dump_q(w.latest)}")
    if not enum and not point:
        raise click.ClickException("nothing to do: pass --enumerate and/or --point")


@main.command("bench")
@click.option("--objects", default=500)
@click.option("--trials", default=100)
def bench_cmd(objects: int, trials: int) -> None:
    """Trigger latency benchmark on a synthetic branching chain."""
    from .bench import bench

    click.echo(bench(objects, trials).render())


@main.command("serve")
@click.option("--port", default=8700)
@click.option("--host", default="127.0.0.1")
def serve_cmd(port: int, host: str) -> None:
    """Serve the live session protocol over a websocket."""
    import uvicorn

    from .server import app

    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
