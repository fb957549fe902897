"""Textual ADL: parse architecture files into the model and print them back."""

from __future__ import annotations

from .lexer import (
    DURATION_UNITS,
    SIZE_UNITS,
    ParseError,
    ParseFailure,
    TokenStream,
    format_duration,
    format_size,
    read_quantity,
    tokenize,
)
from .model import (
    TOP,
    Action,
    ActionKind,
    Architecture,
    BehavioralContract,
    Choice,
    Component,
    Connector,
    DataConstraints,
    DataFacts,
    DataflowContract,
    Direction,
    Endpoint,
    Port,
    ProcessTerm,
    QoSContract,
    Seq,
    Skip,
    Star,
    StructuralContract,
    canonicalize,
    validate,
)

__all__ = ["parse", "serialize", "ParseError", "ParseFailure", "format_term"]

KEYWORDS = frozenset(
    """
    architecture component port in out required script connector contract
    structural behavioral dataflow qos on only must_be_bound protocol skip
    produces size types unknown requires max_size offered_latency
    required_max_latency
    """.split()
)


class _Parser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text), KEYWORDS)
        self.positions: dict[tuple[str, str], tuple[int, int]] = {}

    def mark(self, kind: str, key: str, tok) -> None:
        self.positions.setdefault((kind, key), (tok.line, tok.column))

    def architecture(self) -> Architecture:
        ts = self.ts
        ts.expect("architecture")
        name = ts.ident("architecture name").value
        ts.expect("{")
        components, connectors, contracts = [], [], []
        while not ts.at("}"):
            if ts.at("component"):
                components.append(self.component())
            elif ts.at("connector"):
                connectors.append(self.connector())
            elif ts.at("contract"):
                contracts.append(self.contract())
            else:
                ts.fail(f"unexpected {_describe(ts.peek)}", ("'component'", "'connector'", "'contract'", "'}'"))
        ts.expect("}")
        if ts.peek.kind != "EOF":
            ts.fail(f"unexpected {_describe(ts.peek)} after architecture", ("end of input",))
        return Architecture(name, tuple(components), tuple(connectors), tuple(contracts))

    def component(self) -> Component:
        ts = self.ts
        ts.expect("component")
        tok = ts.ident("component name")
        self.mark("component", tok.value, tok)
        ts.expect("{")
        ports = []
        while ts.at("port"):
            ts.advance()
            direction = Direction(ts.expect("in", "out").value)
            pname = ts.ident("port name").value
            ts.expect(":")
            dtype = ts.ident("data type").value
            required = ts.accept("required") is not None
            ports.append(Port(pname, direction, dtype, required))
        script = None
        if ts.accept("script"):
            if ts.peek.kind != "STRING":
                ts.fail(f"unexpected {_describe(ts.peek)}", ("string",))
            script = ts.advance().value
        if not ts.at("}"):
            ts.fail(f"unexpected {_describe(ts.peek)}", ("'port'", "'script'", "'}'"))
        ts.advance()
        return Component(tok.value, tuple(ports), script)

    def endpoint(self) -> Endpoint:
        comp = self.ts.ident("component name").value
        self.ts.expect(".")
        port = self.ts.ident("port name").value
        return Endpoint(comp, port)

    def connector(self) -> Connector:
        ts = self.ts
        ts.expect("connector")
        tok = ts.ident("connector id")
        self.mark("connector", tok.value, tok)
        ts.expect(":")
        src = self.endpoint()
        ts.expect("->")
        dst = self.endpoint()
        return Connector(tok.value, src, dst)

    def ident_list(self, close: str) -> frozenset[str]:
        ts = self.ts
        names = [ts.ident("type or component name").value]
        while ts.accept(","):
            names.append(ts.ident("type or component name").value)
        ts.expect(close)
        return frozenset(names)

    def contract(self):
        ts = self.ts
        start = ts.expect("contract")
        kind = ts.expect("structural", "behavioral", "dataflow", "qos").value
        ts.expect("on")
        if kind == "behavioral":
            comp = ts.ident("component name").value
            self.mark("contract", f"behavioral {comp}", start)
            ts.expect("{")
            ts.expect("protocol")
            ts.expect(":")
            term = self.term()
            ts.expect("}")
            return BehavioralContract(comp, term)

        ep = self.endpoint()
        self.mark("contract", f"{kind} {ep}", start)
        ts.expect("{")
        if kind == "structural":
            allowed = None
            if ts.accept("only"):
                ts.expect("[")
                allowed = self.ident_list("]")
            must = ts.accept("must_be_bound") is not None
            ts.expect("}")
            return StructuralContract(ep, allowed, must)

        if kind == "dataflow":
            produced = constraints = None
            if ts.accept("produces"):
                ts.expect("size")
                ts.expect("[")
                lo = read_quantity(ts, SIZE_UNITS, "size")
                ts.expect(",")
                hi = TOP if ts.accept("unknown") else read_quantity(ts, SIZE_UNITS, "size")
                ts.expect("]")
                ts.expect("types")
                if ts.accept("unknown"):
                    types = TOP
                else:
                    ts.expect("{")
                    types = self.ident_list("}")
                produced = DataFacts(lo, hi, types)
            if ts.accept("requires"):
                max_size = allowed_types = None
                if ts.accept("max_size"):
                    max_size = read_quantity(ts, SIZE_UNITS, "size")
                if ts.accept("types"):
                    ts.expect("{")
                    allowed_types = self.ident_list("}")
                constraints = DataConstraints(max_size, allowed_types)
            if not ts.at("}"):
                ts.fail(f"unexpected {_describe(ts.peek)}", ("'produces'", "'requires'", "'}'"))
            ts.advance()
            return DataflowContract(ep, produced, constraints)

        offered = required = None
        if ts.accept("offered_latency"):
            offered = TOP if ts.accept("unknown") else read_quantity(ts, DURATION_UNITS, "duration")
        if ts.accept("required_max_latency"):
            required = read_quantity(ts, DURATION_UNITS, "duration")
        if not ts.at("}"):
            ts.fail(f"unexpected {_describe(ts.peek)}", ("'offered_latency'", "'required_max_latency'", "'}'"))
        ts.advance()
        return QoSContract(ep, offered, required)

    # procTerm := seq ; seq := choice (";" choice)* ; choice := star ("|" star)*
    def term(self) -> ProcessTerm:
        ts = self.ts
        left = self.choice()
        while ts.accept(";"):
            left = Seq(left, self.choice())
        return left

    def choice(self) -> ProcessTerm:
        left = self.star()
        while self.ts.accept("|"):
            left = Choice(left, self.star())
        return left

    def star(self) -> ProcessTerm:
        atom = self.atom()
        while self.ts.accept("*"):
            atom = Star(atom)
        return atom

    def atom(self) -> ProcessTerm:
        ts = self.ts
        if ts.accept("("):
            inner = self.term()
            ts.expect(")")
            return inner
        if ts.accept("skip"):
            return Skip()
        port = ts.ident("port name").value
        mark = ts.expect("!", "?").value
        return Action(port, ActionKind.SEND if mark == "!" else ActionKind.RECEIVE)


def _describe(tok) -> str:
    return "end of input" if tok.kind == "EOF" else repr(tok.value)


def parse(text: str) -> Architecture:
    """Parse ADL source into a canonical, validated Architecture.

    Raises ParseFailure carrying positioned errors: the first syntax error,
    or every well-formedness error found after a successful parse.
    """
    parser = _Parser(text)
    arch = parser.architecture()
    problems = validate(arch)
    if problems:
        errors = []
        for p in problems:
            line, col = parser.positions.get(p.location, (1, 1))
            errors.append(ParseError(line, col, str(p)))
        raise ParseFailure(errors)
    return canonicalize(arch)


# -- serialization -----------------------------------------------------------

def format_term(term: ProcessTerm, prec: int = 0) -> str:
    # precedence: 0 seq, 1 choice, 2 star/atom
    if isinstance(term, Action):
        return term.port + ("!" if term.kind is ActionKind.SEND else "?")
    if isinstance(term, Skip):
        return "skip"
    if isinstance(term, Star):
        return f"{format_term(term.body, 2)}*"
    if isinstance(term, Seq):
        text = f"{format_term(term.first, 0)} ; {format_term(term.second, 1)}"
        return f"({text})" if prec > 0 else text
    text = f"{format_term(term.left, 1)} | {format_term(term.right, 2)}"
    return f"({text})" if prec > 1 else text


def _names(values) -> str:
    return ", ".join(sorted(values))


def _contract_text(c) -> str:
    if isinstance(c, StructuralContract):
        body = []
        if c.allowed_clients is not None:
            body.append(f"only [{_names(c.allowed_clients)}]")
        if c.must_be_bound:
            body.append("must_be_bound")
        return f"contract structural on {c.subject} {{ {' '.join(body)} }}"
    if isinstance(c, BehavioralContract):
        return f"contract behavioral on {c.component} {{ protocol: {format_term(c.protocol)} }}"
    if isinstance(c, DataflowContract):
        body = []
        if c.produced is not None:
            f = c.produced
            hi = "unknown" if f.size_hi is TOP else format_size(f.size_hi)
            types = "unknown" if f.types is TOP else f"{{{_names(f.types)}}}"
            body.append(f"produces size [{format_size(f.size_lo)}, {hi}] types {types}")
        if c.constraints is not None:
            req = ["requires"]
            if c.constraints.max_size is not None:
                req.append(f"max_size {format_size(c.constraints.max_size)}")
            if c.constraints.allowed_types is not None:
                req.append(f"types {{{_names(c.constraints.allowed_types)}}}")
            body.append(" ".join(req))
        return f"contract dataflow on {c.port} {{ {' '.join(body)} }}"
    body = []
    if c.offered_latency is not None:
        body.append("offered_latency " + ("unknown" if c.offered_latency is TOP else format_duration(c.offered_latency)))
    if c.required_max_latency is not None:
        body.append(f"required_max_latency {format_duration(c.required_max_latency)}")
    return f"contract qos on {c.port} {{ {' '.join(body)} }}"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize(arch: Architecture) -> str:
    arch = canonicalize(arch)
    lines = [f"architecture {arch.name} {{"]
    for comp in arch.components:
        if not comp.ports and comp.script is None:
            lines.append(f"  component {comp.name} {{ }}")
            continue
        lines.append(f"  component {comp.name} {{")
        for p in comp.ports:
            req = " required" if p.required else ""
            lines.append(f"    port {p.direction.value} {p.name} : {p.data_type}{req}")
        if comp.script is not None:
            lines.append(f"    script {_quote(comp.script)}")
        lines.append("  }")
    for k in arch.connectors:
        lines.append(f"  connector {k.id} : {k.source} -> {k.target}")
    for c in arch.contracts:
        lines.append(f"  {_contract_text(c)}")
    lines.append("}")
    return "\n".join(lines) + "\n"
