"""Behavior scripts and scenarios: the stand-in for business code and test runs.

Script syntax::

    script GlobalSearch {
      on query emit validate size=64B type="ticket" doc=doc
      on results when size > 10MB and type == "dicom" emit display size=min(size, 10MB) type="jpg"
      source query size=100B type="query"
    }

In scripts bare identifiers read message attributes (falling back to
scenario context); quoted strings are type tokens. Scenario attributes are
constants, so bare identifiers there are tokens::

    scenario druggist {
      at 0 stim PDA.query doc=2MB kind=txt
      at 3 context bandwidth=40
    }
"""

from __future__ import annotations

import operator
import random
from dataclasses import dataclass, field
from typing import Union

from ..lexer import DURATION_UNITS, SIZE_UNITS, ParseFailure, TokenStream, read_quantity, tokenize
from ..model import Component, Direction

_UNITS = {**SIZE_UNITS, **DURATION_UNITS}
_SCRIPT_KEYWORDS = frozenset({"script", "on", "when", "emit", "source", "and", "or", "not"})
_SCENARIO_KEYWORDS = frozenset({"scenario", "at", "stim", "context"})

Scalar = Union[int, float, str]


class ScriptError(RuntimeError):
    """A script could not be evaluated (missing attribute, bad operand)."""


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Scalar


@dataclass(frozen=True)
class Attr:
    name: str


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Logic:
    op: str  # and / or / not
    args: tuple


_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.floordiv}
_CMP = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
        "==": operator.eq, "!=": operator.ne}


def evaluate(expr, env: dict, rng: random.Random):
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Attr):
        if expr.name not in env:
            raise ScriptError(f"attribute {expr.name!r} is not available")
        return env[expr.name]
    if isinstance(expr, BinOp):
        left, right = evaluate(expr.left, env, rng), evaluate(expr.right, env, rng)
        try:
            return _ARITH[expr.op](left, right)
        except (TypeError, ZeroDivisionError) as exc:
            raise ScriptError(f"cannot compute {left!r} {expr.op} {right!r}: {exc}") from None
    if isinstance(expr, Call):
        args = [evaluate(a, env, rng) for a in expr.args]
        if expr.fn == "rand":
            return rng.randint(int(args[0]), int(args[1]))
        return (min if expr.fn == "min" else max)(args)
    if isinstance(expr, Compare):
        left, right = evaluate(expr.left, env, rng), evaluate(expr.right, env, rng)
        try:
            return _CMP[expr.op](left, right)
        except TypeError:
            raise ScriptError(f"cannot compare {left!r} {expr.op} {right!r}") from None
    if expr.op == "not":
        return not evaluate(expr.args[0], env, rng)
    if expr.op == "and":
        return all(evaluate(a, env, rng) for a in expr.args)
    return any(evaluate(a, env, rng) for a in expr.args)


class _ExprParser:
    FUNCTIONS = {"min": None, "max": None, "rand": 2}

    def __init__(self, ts: TokenStream):
        self.ts = ts

    def predicate(self):
        args = [self.conjunction()]
        while self.ts.accept("or"):
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else Logic("or", tuple(args))

    def conjunction(self):
        args = [self.negation()]
        while self.ts.accept("and"):
            args.append(self.negation())
        return args[0] if len(args) == 1 else Logic("and", tuple(args))

    def negation(self):
        if self.ts.accept("not"):
            return Logic("not", (self.negation(),))
        left = self.expr()
        op = self.ts.expect(*_CMP).value
        return Compare(op, left, self.expr())

    def expr(self):
        left = self.term()
        while self.ts.peek.kind in ("+", "-"):
            op = self.ts.advance().value
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.ts.peek.kind in ("*", "/"):
            op = self.ts.advance().value
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        if self.ts.accept("-"):
            return BinOp("-", Const(0), self.unary())
        return self.primary()

    def primary(self):
        ts = self.ts
        tok = ts.peek
        if tok.kind == "NUMBER":
            return Const(read_quantity(ts, _UNITS, "number"))
        if tok.kind == "STRING":
            return Const(ts.advance().value)
        if ts.accept("("):
            inner = self.expr()
            ts.expect(")")
            return inner
        name = ts.ident("attribute or function").value
        if ts.peek.kind == "(" and name in self.FUNCTIONS:
            ts.advance()
            args = [self.expr()]
            while ts.accept(","):
                args.append(self.expr())
            ts.expect(")")
            arity = self.FUNCTIONS[name]
            if arity is not None and len(args) != arity:
                ts.fail(f"{name} takes {arity} arguments", tok=tok)
            return Call(name, tuple(args))
        return Attr(name)


def _assignments(ts: TokenStream, value) -> tuple[tuple[str, object], ...]:
    out = []
    while ts.peek.kind == "IDENT" and ts.peek.value not in ts.reserved and ts.peek_at(1).kind == "=":
        name = ts.advance().value
        ts.advance()
        out.append((name, value()))
    return tuple(out)


# -- scripts -----------------------------------------------------------------

@dataclass(frozen=True)
class Emission:
    port: str
    attrs: tuple[tuple[str, object], ...]


@dataclass(frozen=True)
class Rule:
    on_port: str
    guard: object | None
    emits: tuple[Emission, ...]


@dataclass(frozen=True)
class BehaviorScript:
    component: str
    rules: tuple[Rule, ...] = ()
    sources: tuple[Emission, ...] = ()
    source_text: str = field(default="", compare=False)

    def rules_for(self, port: str) -> list[Rule]:
        return [r for r in self.rules if r.on_port == port]

    def sources_for(self, port: str) -> list[Emission]:
        return [s for s in self.sources if s.port == port]

    def problems(self, component: Component) -> list[str]:
        """Ports the script names that the component lacks or uses the wrong way round."""
        out = []

        def need(port: str, direction: Direction, what: str):
            p = component.port(port)
            if p is None:
                out.append(f"{what} names unknown port {port!r}")
            elif p.direction is not direction:
                out.append(f"{what} needs an {direction.value} port, {port!r} is {p.direction.value}")

        for r in self.rules:
            need(r.on_port, Direction.IN, "rule")
            for e in r.emits:
                need(e.port, Direction.OUT, "emit")
        for s in self.sources:
            need(s.port, Direction.OUT, "source")
        return out


def parse_script(text: str) -> BehaviorScript:
    ts = TokenStream(tokenize(text), _SCRIPT_KEYWORDS)
    exprs = _ExprParser(ts)
    ts.expect("script")
    comp = ts.ident("component name").value
    ts.expect("{")
    rules, sources = [], []
    while not ts.at("}"):
        if ts.accept("on"):
            port = ts.ident("port name").value
            guard = exprs.predicate() if ts.accept("when") else None
            emits = []
            while ts.accept("emit"):
                out = ts.ident("port name").value
                emits.append(Emission(out, _assignments(ts, exprs.expr)))
            rules.append(Rule(port, guard, tuple(emits)))
        elif ts.accept("source"):
            port = ts.ident("port name").value
            sources.append(Emission(port, _assignments(ts, exprs.expr)))
        else:
            ts.fail(f"unexpected {ts.peek.value or 'end of input'!r}", ("'on'", "'source'", "'}'"))
    ts.expect("}")
    if ts.peek.kind != "EOF":
        ts.fail("unexpected text after script", ("end of input",))
    return BehaviorScript(comp, tuple(rules), tuple(sources), text)


# -- scenarios ---------------------------------------------------------------

@dataclass(frozen=True)
class Stimulus:
    tick: int
    component: str
    port: str
    attrs: tuple[tuple[str, Scalar], ...] = ()


@dataclass(frozen=True)
class ContextChange:
    tick: int
    attrs: tuple[tuple[str, Scalar], ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    steps: tuple[Stimulus | ContextChange, ...] = ()


def _constant(ts: TokenStream) -> Scalar:
    tok = ts.peek
    if tok.kind == "NUMBER":
        return read_quantity(ts, _UNITS, "number")
    if tok.kind in ("STRING", "IDENT"):
        return ts.advance().value
    ts.fail(f"unexpected {tok.value or 'end of input'!r}", ("number", "token"))


def parse_scenario(text: str) -> Scenario:
    ts = TokenStream(tokenize(text), _SCENARIO_KEYWORDS)
    ts.expect("scenario")
    name = ts.ident("scenario name").value
    ts.expect("{")
    steps = []
    last = 0
    while ts.accept("at"):
        tok = ts.number()
        tick = int(tok.value)
        if "." in tok.value or tick < last:
            ts.fail("ticks must be whole numbers in non-decreasing order", tok=tok)
        last = tick
        if ts.accept("context"):
            steps.append(ContextChange(tick, _assignments(ts, lambda: _constant(ts))))
            continue
        ts.expect("stim")
        comp = ts.ident("component name").value
        ts.expect(".")
        port = ts.ident("port name").value
        steps.append(Stimulus(tick, comp, port, _assignments(ts, lambda: _constant(ts))))
    ts.expect("}")
    if ts.peek.kind != "EOF":
        ts.fail("unexpected text after scenario", ("end of input",))
    return Scenario(name, tuple(steps))


__all__ = [
    "BehaviorScript",
    "ContextChange",
    "Emission",
    "ParseFailure",
    "Rule",
    "Scenario",
    "ScriptError",
    "Stimulus",
    "evaluate",
    "parse_scenario",
    "parse_script",
]
