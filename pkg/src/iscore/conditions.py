"""Three-valued boolean conditions over declared variables and the tick clock.

Grammar (precedence low to high): or, and, not, atom.  Atoms are variable
names, ``true``/``false``, parenthesized expressions, or comparisons of
``tick`` against an integer (``tick >= 8``).  Evaluation is Kleene
three-valued: ``unknown`` propagates through the connectives.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class ConditionError(Exception):
    pass


class TV(str, Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


def tv_not(v: TV) -> TV:
    if v is TV.TRUE:
        return TV.FALSE
    if v is TV.FALSE:
        return TV.TRUE
    return TV.UNKNOWN


def tv_and(a: TV, b: TV) -> TV:
    if a is TV.FALSE or b is TV.FALSE:
        return TV.FALSE
    if a is TV.TRUE and b is TV.TRUE:
        return TV.TRUE
    return TV.UNKNOWN


def tv_or(a: TV, b: TV) -> TV:
    if a is TV.TRUE or b is TV.TRUE:
        return TV.TRUE
    if a is TV.FALSE and b is TV.FALSE:
        return TV.FALSE
    return TV.UNKNOWN


class Expr:
    def variables(self) -> set[str]:
        raise NotImplementedError

    def eval(self, vars: dict[str, TV], tick: int = 0) -> TV:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: bool

    def variables(self) -> set[str]:
        return set()

    def eval(self, vars: dict[str, TV], tick: int = 0) -> TV:
        return TV.TRUE if self.value else TV.FALSE


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def variables(self) -> set[str]:
        return {self.name}

    def eval(self, vars: dict[str, TV], tick: int = 0) -> TV:
        if self.name not in vars:
            raise ConditionError(f"undeclared variable {self.name!r}")
        return vars[self.name]


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr

    def variables(self) -> set[str]:
        return self.operand.variables()

    def eval(self, vars: dict[str, TV], tick: int = 0) -> TV:
        return tv_not(self.operand.eval(vars, tick))


@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr

    def variables(self) -> set[str]:
        return self.left.variables() | self.right.variables()

    def eval(self, vars: dict[str, TV], tick: int = 0) -> TV:
        return tv_and(self.left.eval(vars, tick), self.right.eval(vars, tick))


@dataclass(frozen=True)
class Or(Expr):
    left: Expr
    right: Expr

    def variables(self) -> set[str]:
        return self.left.variables() | self.right.variables()

    def eval(self, vars: dict[str, TV], tick: int = 0) -> TV:
        return tv_or(self.left.eval(vars, tick), self.right.eval(vars, tick))


@dataclass(frozen=True)
class TickCmp(Expr):
    """Comparison of the current tick counter against a constant."""

    op: str  # >=, <=, >, <, ==
    bound: int

    def variables(self) -> set[str]:
        return set()

    def eval(self, vars: dict[str, TV], tick: int = 0) -> TV:
        ok = {
            ">=": tick >= self.bound,
            "<=": tick <= self.bound,
            ">": tick > self.bound,
            "<": tick < self.bound,
            "==": tick == self.bound,
        }[self.op]
        return TV.TRUE if ok else TV.FALSE


_TOKEN = re.compile(
    r"\s*(?:(?P<op>>=|<=|==|>|<|\(|\))"
    r"|(?P<not>not\b|!|¬)"
    r"|(?P<and>and\b|&&|∧)"
    r"|(?P<or>or\b|\|\||∨)"
    r"|(?P<int>\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ConditionError(f"bad token at {text[pos:]!r}")
        pos = m.end()
        for kind in ("op", "not", "and", "or", "int", "name"):
            val = m.group(kind)
            if val is not None:
                tokens.append((kind, val))
                break
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ConditionError("unexpected end of condition")
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        expr = self.or_expr()
        if self.peek() is not None:
            raise ConditionError(f"trailing tokens at {self.peek()!r}")
        return expr

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while (tok := self.peek()) and tok[0] == "or":
            self.take()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.not_expr()
        while (tok := self.peek()) and tok[0] == "and":
            self.take()
            left = And(left, self.not_expr())
        return left

    def not_expr(self) -> Expr:
        tok = self.peek()
        if tok and tok[0] == "not":
            self.take()
            return Not(self.not_expr())
        return self.atom()

    def atom(self) -> Expr:
        kind, val = self.take()
        if kind == "op" and val == "(":
            inner = self.or_expr()
            kind, val = self.take()
            if val != ")":
                raise ConditionError("expected ')'")
            return inner
        if kind == "name":
            if val == "true":
                return Const(True)
            if val == "false":
                return Const(False)
            if val == "tick":
                op_kind, op = self.take()
                if op_kind != "op" or op in ("(", ")"):
                    raise ConditionError("expected comparison after 'tick'")
                int_kind, bound = self.take()
                if int_kind != "int":
                    raise ConditionError("expected integer bound after comparison")
                return TickCmp(op, int(bound))
            return Var(val)
        raise ConditionError(f"unexpected token {val!r}")


def parse_condition(text: str) -> Expr:
    text = text.strip()
    if not text:
        return Const(True)
    return _Parser(_tokenize(text)).parse()
