"""Construction and reconfiguration operations on a running system."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .debugplan import Probe
from .model import Component, Connector, Direction, Endpoint, Port


@dataclass(frozen=True)
class DetachProbe:
    id: str


@dataclass(frozen=True)
class RemoveConnector:
    id: str


@dataclass(frozen=True)
class RemoveComponent:
    name: str


@dataclass(frozen=True)
class AddComponent:
    component: Component


@dataclass(frozen=True)
class AddConnector:
    connector: Connector


@dataclass(frozen=True)
class AttachProbe:
    probe: Probe


ReconfigOp = Union[DetachProbe, RemoveConnector, RemoveComponent, AddComponent, AddConnector, AttachProbe]

#: Order every diff respects: detach probes, unwire, remove, add, wire, attach.
OP_ORDER = (DetachProbe, RemoveConnector, RemoveComponent, AddComponent, AddConnector, AttachProbe)
_RANK = {cls: i for i, cls in enumerate(OP_ORDER)}


def op_key(op: ReconfigOp) -> str:
    if isinstance(op, AddComponent):
        return op.component.name
    if isinstance(op, AddConnector):
        return op.connector.id
    if isinstance(op, AttachProbe):
        return op.probe.id
    if isinstance(op, RemoveComponent):
        return op.name
    return op.id


def sort_key(op: ReconfigOp) -> tuple[int, str]:
    return _RANK[type(op)], op_key(op)


def describe(op: ReconfigOp) -> str:
    if isinstance(op, AddConnector):
        k = op.connector
        return f"AddConnector({k.id}: {k.source} -> {k.target})"
    if isinstance(op, AttachProbe):
        return f"AttachProbe({op.probe.id} on {op.probe.connector})"
    return f"{type(op).__name__}({op_key(op)})"


def _component_json(c: Component) -> dict:
    out = {
        "name": c.name,
        "ports": [{"name": p.name, "direction": p.direction.value, "type": p.data_type, "required": p.required}
                  for p in c.ports],
    }
    if c.script is not None:
        out["script"] = c.script
    return out


def _component_from_json(d: dict) -> Component:
    ports = tuple(Port(p["name"], Direction(p["direction"]), p["type"], p["required"]) for p in d["ports"])
    return Component(d["name"], ports, d.get("script"))


def op_to_json(op: ReconfigOp) -> dict:
    if isinstance(op, AddComponent):
        payload = _component_json(op.component)
    elif isinstance(op, AddConnector):
        k = op.connector
        payload = {"id": k.id, "source": str(k.source), "target": str(k.target)}
    elif isinstance(op, AttachProbe):
        payload = op.probe.to_json()
    else:
        payload = {"id": op_key(op)}
    return {"op": type(op).__name__, "payload": payload}


def op_from_json(data: dict) -> ReconfigOp:
    kind, p = data["op"], data["payload"]
    if kind == "AddComponent":
        return AddComponent(_component_from_json(p))
    if kind == "AddConnector":
        src, dst = (Endpoint(*p[end].split(".", 1)) for end in ("source", "target"))
        return AddConnector(Connector(p["id"], src, dst))
    if kind == "AttachProbe":
        return AttachProbe(Probe.from_json(p))
    cls = {c.__name__: c for c in OP_ORDER}[kind]
    return cls(p["id"])
