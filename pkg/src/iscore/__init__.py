"""Compiler and runtime for interactive scores.

A score is a hierarchy of timed objects whose intervals carry flexible
duration bounds.  The compiler turns it into an event graph, a constraint
system over interval variables and an executable timed net; the runtime
fires static events on schedule, accepts live triggers on interactive
points inside computed feasibility windows, and spreads the resulting
timing perturbations according to each object's declared behavior.
"""

from .branching import BranchEngine, BranchError, UserScript
from .compiler import CompiledScore, compile_score
from .graph import CompileError
from .model import (
    Behavior,
    ParseError,
    Score,
    ScoreError,
    parse_score,
    serialize_score,
    validate,
)
from .propagate import PropagationError, Window, feasible_window
from .vm import Vm, VmCommand, VmError, init, run_to_completion

__all__ = [
    "Behavior",
    "BranchEngine",
    "BranchError",
    "CompileError",
    "CompiledScore",
    "ParseError",
    "PropagationError",
    "Score",
    "ScoreError",
    "UserScript",
    "Vm",
    "VmCommand",
    "VmError",
    "Window",
    "compile_score",
    "feasible_window",
    "init",
    "parse_score",
    "run_to_completion",
    "serialize_score",
    "validate",
]

__version__ = "0.1.0"
