"""Deterministic in-process component platform.

One dispatch loop owns the system. Each stimulus is injected and the
resulting message cascade runs to completion before the next stimulus;
pending messages are delivered in ``(tick, connector id, sequence)`` order,
which keeps per-connector FIFO and makes traces reproducible.
"""

from __future__ import annotations

import copy
import enum
import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Callable

from ..analysis import AnalysisReport, Variable, analyze
from ..debugplan import DebugPlan, DeploymentConfig, InterceptionPoint, Probe
from ..model import Architecture, Component, Connector, Direction
from ..ops import (
    AddComponent,
    AddConnector,
    AttachProbe,
    DetachProbe,
    ReconfigOp,
    RemoveComponent,
    RemoveConnector,
    op_from_json,
    op_to_json,
)
from .scripts import BehaviorScript, ContextChange, Scenario, ScriptError, Stimulus, evaluate, parse_script

MAX_DELIVERIES_PER_STIMULUS = 100_000

#: Message attribute read for each capturable variable.
CAPTURE_ATTR = {Variable.SIZE: "size", Variable.TYPE: "type", Variable.LATENCY: "latency"}


class DeploymentError(RuntimeError):
    pass


class Status(str, enum.Enum):
    RUNNING = "Running"
    QUIESCED = "Quiesced"


@dataclass
class Instance:
    component: Component
    script: BehaviorScript | None
    received: dict[str, int] = field(default_factory=dict)
    sent: dict[str, int] = field(default_factory=dict)

    def state(self) -> dict:
        return {"received": dict(sorted(self.received.items())), "sent": dict(sorted(self.sent.items()))}


@dataclass(order=True)
class Message:
    sent_at: int
    connector: str
    seq: int
    attrs: dict = field(compare=False)


def trace_line(entry: dict) -> str:
    return json.dumps(entry, sort_keys=True, separators=(",", ":"))


class RunningSystem:
    """The runtime view: instances, bindings and woven probes."""

    def __init__(self, model: Architecture, plan: DebugPlan, scripts: dict[str, BehaviorScript], seed: int):
        self.model = model
        self.plan = plan
        self.scripts = dict(scripts)
        self.seed = seed
        self.rng = random.Random(seed)
        self.instances: dict[str, Instance] = {}
        self.bindings: dict[str, Connector] = {}
        self.probes: dict[str, InterceptionPoint] = {}
        self.clock = 0
        self.status = Status.RUNNING
        self.context: dict = {}
        self.construction_log: list[ReconfigOp] = []
        self.trace: list[dict] = []
        self.listeners: list[Callable[[dict], None]] = []
        self._queue: list[Message] = []
        self._seq = 0
        self._pending: list[tuple[int, Stimulus | ContextChange]] = []
        self._budget = 0
        self.runs = 0

    # -- views ---------------------------------------------------------------

    def view(self) -> tuple[tuple[Component, ...], tuple[Connector, ...]]:
        comps = tuple(i.component for _, i in sorted(self.instances.items()))
        conns = tuple(k for _, k in sorted(self.bindings.items()))
        return comps, conns

    def mirrors(self, arch: Architecture) -> bool:
        return self.view() == (arch.components, arch.connectors)

    def describe(self) -> dict:
        return {
            "status": self.status.value,
            "clock": self.clock,
            "components": sorted(self.instances),
            "bindings": {k.id: f"{k.source} -> {k.target}" for k in sorted(self.bindings.values(), key=lambda k: k.id)},
            "probes": {pid: p.connector for pid, p in sorted(self.probes.items())},
            "instances": {n: i.state() for n, i in sorted(self.instances.items())},
        }

    @property
    def in_flight(self) -> int:
        return len(self._queue)

    # -- construction --------------------------------------------------------

    def apply(self, op: ReconfigOp) -> None:
        if isinstance(op, AddComponent):
            c = op.component
            if c.name in self.instances:
                raise DeploymentError(f"component {c.name!r} already exists")
            script = self.scripts.get(c.name)
            if script is None and c.in_ports:
                raise DeploymentError(f"component {c.name!r} has in ports but no behavior script")
            if script is not None and script.problems(c):
                raise DeploymentError(f"script for {c.name}: {'; '.join(script.problems(c))}")
            self.instances[c.name] = Instance(c, script)
        elif isinstance(op, RemoveComponent):
            if op.name not in self.instances:
                raise DeploymentError(f"unknown component {op.name!r}")
            users = sorted(k.id for k in self.bindings.values() if op.name in (k.source.component, k.target.component))
            if users:
                raise DeploymentError(f"component {op.name!r} is still bound by {', '.join(users)}")
            del self.instances[op.name]
        elif isinstance(op, AddConnector):
            k = op.connector
            if k.id in self.bindings:
                raise DeploymentError(f"connector {k.id!r} already exists")
            for ep, direction in ((k.source, Direction.OUT), (k.target, Direction.IN)):
                inst = self.instances.get(ep.component)
                port = inst.component.port(ep.port) if inst else None
                if port is None or port.direction is not direction:
                    raise DeploymentError(f"connector {k.id!r}: no {direction.value} port {ep}")
            self.bindings[k.id] = k
        elif isinstance(op, RemoveConnector):
            if op.id not in self.bindings:
                raise DeploymentError(f"unknown connector {op.id!r}")
            probed = sorted(p.probe for p in self.probes.values() if p.connector == op.id)
            if probed:
                raise DeploymentError(f"connector {op.id!r} still carries probe {', '.join(probed)}")
            del self.bindings[op.id]
        elif isinstance(op, AttachProbe):
            p = op.probe
            if p.id in self.probes:
                raise DeploymentError(f"probe {p.id!r} already attached")
            k = self.bindings.get(p.connector)
            if k is None:
                raise DeploymentError(f"probe {p.id!r} targets unknown connector {p.connector!r}")
            self.probes[p.id] = InterceptionPoint(p.id, k.id, k.target.component, k.target.port, p.captures)
        elif isinstance(op, DetachProbe):
            if op.id not in self.probes:
                raise DeploymentError(f"unknown probe {op.id!r}")
            del self.probes[op.id]
        else:
            raise TypeError(f"not a reconfiguration op: {op!r}")

    def snapshot(self) -> dict:
        """Copy of the runtime view; model, plan and scripts are immutable values."""
        return {
            "model": self.model,
            "plan": self.plan,
            "scripts": dict(self.scripts),
            "instances": {n: copy.copy(i) for n, i in self.instances.items()},
            "counters": {n: (dict(i.received), dict(i.sent)) for n, i in self.instances.items()},
            "bindings": dict(self.bindings),
            "probes": dict(self.probes),
            "construction_log": list(self.construction_log),
            "status": self.status,
        }

    def restore(self, snap: dict) -> None:
        snap = dict(snap)
        counters = snap.pop("counters")
        for k, v in snap.items():
            setattr(self, k, copy.copy(v))
        self.instances = {n: copy.copy(i) for n, i in snap["instances"].items()}
        for n, (received, sent) in counters.items():
            self.instances[n].received = dict(received)
            self.instances[n].sent = dict(sent)

    def apply_ops(self, ops: list[ReconfigOp], scripts: dict[str, BehaviorScript] | None = None) -> RunningSystem:
        """Apply ``ops`` in order while quiesced; all or nothing."""
        if self.status is not Status.QUIESCED:
            raise DeploymentError("reconfiguration needs a quiesced system")
        snap = self.snapshot()
        try:
            if scripts:
                self.scripts.update(scripts)
            for op in ops:
                self.apply(op)
        except Exception:
            self.restore(snap)
            raise
        return self

    # -- control -------------------------------------------------------------

    def quiesce(self) -> RunningSystem:
        if self.status is not Status.RUNNING:
            raise DeploymentError("quiesce needs a running system")
        while self._queue:
            self._deliver_next()
        self.status = Status.QUIESCED
        return self

    def resume(self) -> RunningSystem:
        if self.status is not Status.QUIESCED:
            raise DeploymentError("resume needs a quiesced system")
        self.status = Status.RUNNING
        return self

    # -- dispatch ------------------------------------------------------------

    def start(self, scenario: Scenario) -> None:
        """Queue a scenario's steps behind anything still pending.

        Scenario ticks count from the start of the run: tick 0 of the first
        run is clock 0, later runs begin one tick after the current clock.
        """
        for step in scenario.steps:
            if isinstance(step, Stimulus):
                inst = self.instances.get(step.component)
                if inst is None or inst.component.port(step.port) is None:
                    raise DeploymentError(f"scenario {scenario.name}: unknown stimulus target {step.component}.{step.port}")
        base = self.clock + 1 if self.runs else 0
        if self._pending:
            base = max(base, self._pending[-1][0])
        self.runs += 1
        self._pending.extend((base + step.tick, step) for step in scenario.steps)

    def step(self) -> bool:
        """Deliver one message, or inject the next stimulus when nothing is in flight."""
        if self.status is not Status.RUNNING:
            raise DeploymentError("dispatch is halted while quiesced")
        if self._queue:
            self._deliver_next()
            return True
        if self._pending:
            self._inject(*self._pending.pop(0))
            return True
        return False

    def run(self) -> list[dict]:
        start = len(self.trace)
        while self.step():
            pass
        return self.trace[start:]

    def run_scenario(self, scenario: Scenario) -> list[dict]:
        self.start(scenario)
        return self.run()

    def _env(self, attrs: dict) -> dict:
        env = dict(self.context)
        env.update(attrs)
        return env

    def _inject(self, tick: int, step: Stimulus | ContextChange) -> None:
        self.clock = max(self.clock, tick)
        self._budget = MAX_DELIVERIES_PER_STIMULUS
        if isinstance(step, ContextChange):
            self.context.update(step.attrs)
            self.trace.append({"kind": "context", "tick": self.clock, "attrs": dict(step.attrs)})
            return
        attrs = dict(step.attrs)
        self.trace.append({"kind": "stimulus", "tick": self.clock, "target": f"{step.component}.{step.port}",
                           "attrs": attrs})
        inst = self.instances[step.component]
        port = inst.component.port(step.port)
        if port.direction is Direction.IN:
            self._react(inst, step.port, attrs)
            return
        sources = inst.script.sources_for(step.port) if inst.script else []
        if not sources:
            self._send(inst, step.port, attrs)
        for src in sources:
            self._send(inst, src.port, self._eval_attrs(src.attrs, self._env(attrs), inst))

    def _eval_attrs(self, assignments, env: dict, inst: Instance) -> dict:
        try:
            return {name: evaluate(expr, env, self.rng) for name, expr in assignments}
        except ScriptError as exc:
            raise ScriptError(f"{inst.component.name}: {exc}") from None

    def _send(self, inst: Instance, port: str, attrs: dict) -> None:
        name = inst.component.name
        inst.sent[port] = inst.sent.get(port, 0) + 1
        for k in sorted(self.bindings.values(), key=lambda k: k.id):
            if k.source.component == name and k.source.port == port:
                self._seq += 1
                heapq.heappush(self._queue, Message(self.clock, k.id, self._seq, dict(attrs)))

    def _deliver_next(self) -> None:
        self._budget -= 1
        if self._budget < 0:
            raise DeploymentError("message cascade did not settle; check scripts for unbounded loops")
        msg = heapq.heappop(self._queue)
        k = self.bindings[msg.connector]
        self.trace.append({"kind": "message", "tick": self.clock, "connector": k.id, "sent_at": msg.sent_at,
                           "seq": msg.seq, "attrs": msg.attrs})
        for point in sorted(self.probes.values(), key=lambda p: p.probe):
            if point.connector == k.id:
                captured = {v.value: msg.attrs.get(CAPTURE_ATTR[v]) for v in sorted(point.captures, key=lambda v: v.value)}
                event = {"kind": "event", "tick": self.clock, "probe": point.probe, "connector": k.id,
                         "captured": captured}
                self.trace.append(event)
                for listener in list(self.listeners):
                    listener(event)
        self._react(self.instances[k.target.component], k.target.port, msg.attrs)

    def _react(self, inst: Instance, port: str, attrs: dict) -> None:
        inst.received[port] = inst.received.get(port, 0) + 1
        if inst.script is None:
            return
        env = self._env(attrs)
        for rule in inst.script.rules_for(port):
            if rule.guard is not None:
                try:
                    if not evaluate(rule.guard, env, self.rng):
                        continue
                except ScriptError as exc:
                    raise ScriptError(f"{inst.component.name}: {exc}") from None
            for emission in rule.emits:
                self._send(inst, emission.port, self._eval_attrs(emission.attrs, env, inst))

    # -- persistence ---------------------------------------------------------

    def to_json(self) -> dict:
        from ..adl import serialize

        if self._queue or self._pending:
            raise DeploymentError("cannot persist a system with work in flight")
        version, internal, gauss = self.rng.getstate()
        return {
            "model": serialize(self.model),
            "plan": self.plan.to_json(),
            "seed": self.seed,
            "rng": [version, list(internal), gauss],
            "clock": self.clock,
            "runs": self.runs,
            "seq": self._seq,
            "status": self.status.value,
            "context": self.context,
            "scripts": {n: s.source_text for n, s in sorted(self.scripts.items())},
            "instances": {n: i.state() for n, i in sorted(self.instances.items())},
            "bindings": sorted(self.bindings),
            "probes": [self.plan.probe(pid).to_json() if self.plan.probe(pid) else
                       Probe(pid, p.connector, p.captures).to_json() for pid, p in sorted(self.probes.items())],
            "construction_log": [op_to_json(op) for op in self.construction_log],
        }

    @classmethod
    def from_json(cls, data: dict) -> RunningSystem:
        from ..adl import parse

        model = parse(data["model"])
        scripts = {n: parse_script(text) for n, text in data["scripts"].items()}
        system = cls(model, DebugPlan.from_json(data["plan"]), scripts, data["seed"])
        version, internal, gauss = data["rng"]
        system.rng.setstate((version, tuple(internal), gauss))
        system.clock = data["clock"]
        system.runs = data.get("runs", 0)
        system._seq = data.get("seq", 0)
        system.context = data["context"]
        system.status = Status.QUIESCED
        for comp in model.components:
            system.apply(AddComponent(comp))
        for k in model.connectors:
            system.apply(AddConnector(k))
        for p in data["probes"]:
            system.apply(AttachProbe(Probe.from_json(p)))
        for name, state in data["instances"].items():
            system.instances[name].received = dict(state["received"])
            system.instances[name].sent = dict(state["sent"])
        system.status = Status(data["status"])
        system.construction_log = [op_from_json(op) for op in data["construction_log"]]
        return system


def construction_sequence(arch: Architecture, config: DeploymentConfig, plan: DebugPlan) -> list[ReconfigOp]:
    ops: list[ReconfigOp] = [AddComponent(c) for c in sorted(arch.components, key=lambda c: c.name)]
    ops += [AddConnector(k) for k in sorted(arch.connectors, key=lambda k: k.id)]
    for point in config.points:
        probe = plan.probe(point.probe) or Probe(point.probe, point.connector, point.captures)
        ops.append(AttachProbe(probe))
    return ops


def instantiate(arch: Architecture, config: DeploymentConfig, scripts: dict[str, BehaviorScript],
                seed: int = 0, plan: DebugPlan | None = None,
                report: AnalysisReport | None = None) -> RunningSystem:
    """Build a running system through its explicit construction sequence."""
    from ..model import canonicalize

    arch = canonicalize(arch)
    report = report if report is not None else analyze(arch)
    if not report.gate_passed:
        bad = "; ".join(f"{v.subject}: {v.reason}" for v in report.verdicts if v.reason)
        raise DeploymentError(f"static analysis gate not passed: {bad}")
    plan = plan if plan is not None else DebugPlan()
    system = RunningSystem(arch, plan, scripts, seed)
    system.status = Status.QUIESCED
    ops = construction_sequence(arch, config, plan)
    for op in ops:
        system.apply(op)
    system.construction_log = ops
    system.status = Status.RUNNING
    return system
