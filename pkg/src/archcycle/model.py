"""Architecture metamodel: structure, the four contract kinds, validation.

All model values are frozen dataclasses; edits produce new values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Union


class _Top(enum.Enum):
    TOP = "unknown"

    def __repr__(self) -> str:
        return "TOP"


#: Lattice top, read as "unknown" for sizes, type sets and latencies.
TOP = _Top.TOP


class Direction(str, enum.Enum):
    IN = "in"
    OUT = "out"


class ModelError(ValueError):
    """Raised when an operation needs a well-formed model and did not get one."""

    def __init__(self, errors: list[WellFormednessError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors) or "ill-formed model")


@dataclass(frozen=True)
class Endpoint:
    component: str
    port: str

    def __str__(self) -> str:
        return f"{self.component}.{self.port}"


@dataclass(frozen=True)
class Port:
    name: str
    direction: Direction
    data_type: str
    required: bool = False


@dataclass(frozen=True)
class Component:
    name: str
    ports: tuple[Port, ...] = ()
    script: str | None = None

    def port(self, name: str) -> Port | None:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    @property
    def in_ports(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction is Direction.IN)

    @property
    def out_ports(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction is Direction.OUT)


@dataclass(frozen=True)
class Connector:
    id: str
    source: Endpoint
    target: Endpoint


# -- process terms -----------------------------------------------------------

class ActionKind(str, enum.Enum):
    SEND = "send"
    RECEIVE = "receive"


@dataclass(frozen=True)
class Action:
    port: str
    kind: ActionKind


@dataclass(frozen=True)
class Seq:
    first: ProcessTerm
    second: ProcessTerm


@dataclass(frozen=True)
class Choice:
    left: ProcessTerm
    right: ProcessTerm


@dataclass(frozen=True)
class Star:
    body: ProcessTerm


@dataclass(frozen=True)
class Skip:
    pass


ProcessTerm = Union[Action, Seq, Choice, Star, Skip]


def term_actions(term: ProcessTerm) -> list[Action]:
    """Actions of ``term`` in left-to-right order."""
    if isinstance(term, Action):
        return [term]
    if isinstance(term, Seq):
        return term_actions(term.first) + term_actions(term.second)
    if isinstance(term, Choice):
        return term_actions(term.left) + term_actions(term.right)
    if isinstance(term, Star):
        return term_actions(term.body)
    return []


# -- contracts ---------------------------------------------------------------

@dataclass(frozen=True)
class StructuralContract:
    subject: Endpoint
    allowed_clients: frozenset[str] | None = None
    must_be_bound: bool = False


@dataclass(frozen=True)
class BehavioralContract:
    component: str
    protocol: ProcessTerm


@dataclass(frozen=True)
class DataFacts:
    """Size interval in bytes plus a type-token set; either may be TOP."""

    size_lo: int = 0
    size_hi: int | _Top = TOP
    types: frozenset[str] | _Top = TOP

    @classmethod
    def top(cls) -> DataFacts:
        return cls(0, TOP, TOP)

    def join(self, other: DataFacts | None) -> DataFacts:
        if other is None:
            return self
        hi = TOP if TOP in (self.size_hi, other.size_hi) else max(self.size_hi, other.size_hi)
        types = TOP if TOP in (self.types, other.types) else self.types | other.types
        return DataFacts(min(self.size_lo, other.size_lo), hi, types)


@dataclass(frozen=True)
class DataConstraints:
    max_size: int | None = None
    allowed_types: frozenset[str] | None = None


@dataclass(frozen=True)
class DataflowContract:
    port: Endpoint
    produced: DataFacts | None = None
    constraints: DataConstraints | None = None


@dataclass(frozen=True)
class QoSContract:
    port: Endpoint
    offered_latency: float | _Top | None = None
    required_max_latency: float | None = None


Contract = Union[StructuralContract, BehavioralContract, DataflowContract, QoSContract]

_CONTRACT_RANK = {
    StructuralContract: 0,
    BehavioralContract: 1,
    DataflowContract: 2,
    QoSContract: 3,
}

CONTRACT_KIND = {
    StructuralContract: "structural",
    BehavioralContract: "behavioral",
    DataflowContract: "dataflow",
    QoSContract: "qos",
}


def contract_subject(c: Contract) -> str:
    if isinstance(c, StructuralContract):
        return str(c.subject)
    if isinstance(c, BehavioralContract):
        return c.component
    return str(c.port)


def contract_key(c: Contract) -> tuple[int, str]:
    return _CONTRACT_RANK[type(c)], contract_subject(c)


@dataclass(frozen=True)
class Architecture:
    name: str
    components: tuple[Component, ...] = ()
    connectors: tuple[Connector, ...] = ()
    contracts: tuple[Contract, ...] = field(default=())

    def component(self, name: str) -> Component | None:
        for c in self.components:
            if c.name == name:
                return c
        return None

    def connector(self, cid: str) -> Connector | None:
        for k in self.connectors:
            if k.id == cid:
                return k
        return None

    def port(self, ep: Endpoint) -> Port | None:
        comp = self.component(ep.component)
        return comp.port(ep.port) if comp else None

    def contracts_of(self, kind: type) -> list:
        return [c for c in self.contracts if isinstance(c, kind)]


# -- validation --------------------------------------------------------------

@dataclass(frozen=True)
class WellFormednessError:
    """One well-formedness violation.

    ``location`` is a (kind, key) pair such as ``("connector", "k1")`` or
    ``("component", "PDA")`` that the ADL front-end maps back to a source
    position.
    """

    location: tuple[str, str]
    message: str

    def __str__(self) -> str:
        kind, key = self.location
        return f"{kind} {key}: {self.message}"


def validate(arch: Architecture) -> list[WellFormednessError]:
    errors: list[WellFormednessError] = []

    def err(kind: str, key: str, msg: str) -> None:
        errors.append(WellFormednessError((kind, key), msg))

    comps: dict[str, Component] = {}
    for comp in arch.components:
        if comp.name in comps:
            err("component", comp.name, "duplicate component name")
            continue
        comps[comp.name] = comp
        seen: set[str] = set()
        for p in comp.ports:
            if p.name in seen:
                err("component", comp.name, f"duplicate port name {p.name!r}")
            seen.add(p.name)

    def lookup(ep: Endpoint) -> Port | None:
        comp = comps.get(ep.component)
        return comp.port(ep.port) if comp else None

    bound: set[Endpoint] = set()
    ids: set[str] = set()
    for k in arch.connectors:
        if k.id in ids:
            err("connector", k.id, "duplicate connector id")
            continue
        ids.add(k.id)
        src, dst = lookup(k.source), lookup(k.target)
        if src is None:
            err("connector", k.id, f"dangling endpoint {k.source}")
        if dst is None:
            err("connector", k.id, f"dangling endpoint {k.target}")
        if src is None or dst is None:
            continue
        if src.direction is not Direction.OUT or dst.direction is not Direction.IN:
            err("connector", k.id, "direction mismatch: connectors join an out port to an in port")
            continue
        bound.update((k.source, k.target))

    for comp in comps.values():
        for p in comp.ports:
            if p.required and Endpoint(comp.name, p.name) not in bound:
                err("component", comp.name, f"required port {p.name!r} is unbound")

    seen_contracts: set[tuple[int, str]] = set()
    for c in arch.contracts:
        key = contract_key(c)
        loc = ("contract", f"{CONTRACT_KIND[type(c)]} {key[1]}")
        if key in seen_contracts:
            errors.append(WellFormednessError(loc, "duplicate contract"))
            continue
        seen_contracts.add(key)
        for msg in _contract_errors(c, comps, lookup):
            errors.append(WellFormednessError(loc, msg))
    return errors


def _contract_errors(c: Contract, comps: dict[str, Component], lookup) -> list[str]:
    if isinstance(c, BehavioralContract):
        comp = comps.get(c.component)
        if comp is None:
            return [f"unknown component {c.component!r}"]
        out = []
        for act in term_actions(c.protocol):
            port = comp.port(act.port)
            if port is None:
                out.append(f"protocol action names unknown port {act.port!r}")
            elif (act.kind is ActionKind.SEND) != (port.direction is Direction.OUT):
                sym = "!" if act.kind is ActionKind.SEND else "?"
                out.append(f"protocol action {act.port}{sym} does not match port direction")
        return out

    ep = c.subject if isinstance(c, StructuralContract) else c.port
    port = lookup(ep)
    if port is None:
        return [f"unknown port {ep}"]
    out = []
    if isinstance(c, StructuralContract):
        if c.allowed_clients is not None:
            if not c.allowed_clients:
                out.append("allowed clients must be non-empty")
            out += [f"unknown client component {n!r}" for n in sorted(c.allowed_clients) if n not in comps]
    elif isinstance(c, DataflowContract):
        if c.produced is not None:
            if port.direction is not Direction.OUT:
                out.append("produced facts are only allowed on out ports")
            f = c.produced
            if f.size_lo < 0:
                out.append("size lower bound must be >= 0")
            if f.size_hi is not TOP and f.size_hi < f.size_lo:
                out.append("size interval is empty")
            if f.types is not TOP and not f.types:
                out.append("produced type set is empty")
        if c.constraints is not None:
            if port.direction is not Direction.IN:
                out.append("constraints are only allowed on in ports")
            if c.constraints.max_size is not None and c.constraints.max_size < 0:
                out.append("max size must be >= 0")
    elif isinstance(c, QoSContract):
        if c.offered_latency is not None:
            if port.direction is not Direction.OUT:
                out.append("offered latency is only allowed on out ports")
            if c.offered_latency is not TOP and c.offered_latency < 0:
                out.append("offered latency must be >= 0")
        if c.required_max_latency is not None:
            if port.direction is not Direction.IN:
                out.append("required latency is only allowed on in ports")
            if c.required_max_latency < 0:
                out.append("required latency must be >= 0")
    return out


def require_valid(arch: Architecture) -> None:
    errors = validate(arch)
    if errors:
        raise ModelError(errors)


def canonicalize(arch: Architecture) -> Architecture:
    """Stable ordering: components, ports, connectors and contracts sorted by key."""
    require_valid(arch)
    comps = tuple(
        replace(c, ports=tuple(sorted(c.ports, key=lambda p: p.name)))
        for c in sorted(arch.components, key=lambda c: c.name)
    )
    return Architecture(
        arch.name,
        comps,
        tuple(sorted(arch.connectors, key=lambda k: k.id)),
        tuple(sorted(arch.contracts, key=contract_key)),
    )


def bound_endpoints(arch: Architecture) -> set[Endpoint]:
    out: set[Endpoint] = set()
    for k in arch.connectors:
        out.add(k.source)
        out.add(k.target)
    return out
