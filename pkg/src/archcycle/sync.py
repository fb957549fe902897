"""Keep the running system in step with an edited model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .analysis import AnalysisReport, analyze
from .analysis.protocols import DEFAULT_STATE_CAP
from .debugplan import NOTIFY, DebugAction, DebugPlan, plan, weave
from .model import Architecture, canonicalize, require_valid
from .ops import (
    AddComponent,
    AddConnector,
    AttachProbe,
    DetachProbe,
    ReconfigOp,
    RemoveComponent,
    RemoveConnector,
    describe,
    op_to_json,
    sort_key,
)
from .runtime import BehaviorScript, DeploymentError, RunningSystem, Status


@dataclass(frozen=True)
class ModelDiff:
    ops: tuple[ReconfigOp, ...] = ()

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def to_json(self) -> dict:
        return {"ops": [op_to_json(op) for op in self.ops]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def render(self) -> str:
        if not self.ops:
            return "(no changes)"
        return "\n".join(describe(op) for op in self.ops)


def diff(old: Architecture, old_plan: DebugPlan, new: Architecture, new_plan: DebugPlan) -> ModelDiff:
    """Ops turning the old runtime view into the new one.

    Elements are matched by name or id; anything changed is removed and
    re-added, and connectors touching a re-added component are re-added with
    it. Probes survive only when identical and still on an untouched connector.
    """
    require_valid(old)
    require_valid(new)
    old_c = {c.name: c for c in old.components}
    new_c = {c.name: c for c in new.components}
    old_k = {k.id: k for k in old.connectors}
    new_k = {k.id: k for k in new.connectors}

    gone_c = {n for n, c in old_c.items() if new_c.get(n) != c}
    fresh_c = {n for n, c in new_c.items() if old_c.get(n) != c}

    def touches(k, names) -> bool:
        return k.source.component in names or k.target.component in names

    gone_k = {i for i, k in old_k.items() if new_k.get(i) != k or touches(k, gone_c)}
    fresh_k = {i for i, k in new_k.items() if old_k.get(i) != k or touches(k, fresh_c) or i in gone_k}

    old_p = {p.id: p for p in old_plan.probes}
    new_p = {p.id: p for p in new_plan.probes}
    kept_p = {i for i, p in old_p.items() if new_p.get(i) == p and p.connector not in gone_k}

    ops: list[ReconfigOp] = []
    ops += [DetachProbe(i) for i in old_p if i not in kept_p]
    ops += [RemoveConnector(i) for i in gone_k]
    ops += [RemoveComponent(n) for n in gone_c]
    ops += [AddComponent(new_c[n]) for n in fresh_c]
    ops += [AddConnector(new_k[i]) for i in fresh_k]
    ops += [AttachProbe(new_p[i]) for i in new_p if i not in kept_p]
    return ModelDiff(tuple(sorted(ops, key=sort_key)))


def apply_diff(arch: Architecture, model_diff: ModelDiff) -> Architecture:
    """Replay structural ops on a model; probe ops only concern the runtime."""
    comps = {c.name: c for c in arch.components}
    conns = {k.id: k for k in arch.connectors}
    for op in model_diff:
        if isinstance(op, RemoveConnector):
            if conns.pop(op.id, None) is None:
                raise ValueError(f"unknown connector {op.id!r}")
        elif isinstance(op, RemoveComponent):
            if comps.pop(op.name, None) is None or any(
                    op.name in (k.source.component, k.target.component) for k in conns.values()):
                raise ValueError(f"cannot remove component {op.name!r}")
        elif isinstance(op, AddComponent):
            if op.component.name in comps:
                raise ValueError(f"component {op.component.name!r} already exists")
            comps[op.component.name] = op.component
        elif isinstance(op, AddConnector):
            if op.connector.id in conns:
                raise ValueError(f"connector {op.connector.id!r} already exists")
            conns[op.connector.id] = op.connector
    names = set(comps)
    contracts = tuple(c for c in arch.contracts if _contract_alive(c, names))
    return canonicalize(Architecture(arch.name, tuple(comps.values()), tuple(conns.values()), contracts))


def _contract_alive(contract, names: set[str]) -> bool:
    comp = getattr(contract, "component", None)
    if comp is None:
        ep = getattr(contract, "subject", None) or contract.port
        comp = ep.component
    return comp in names


@dataclass
class EvolveResult:
    accepted: bool
    report: AnalysisReport
    plan: DebugPlan | None = None
    diff: ModelDiff = field(default_factory=ModelDiff)

    def to_json(self) -> dict:
        out = {"accepted": self.accepted, "report": self.report.to_json(), "diff": self.diff.to_json()}
        if self.plan is not None:
            out["plan"] = self.plan.to_json()
        return out


def evolve(system: RunningSystem, new_arch: Architecture, scripts: dict[str, BehaviorScript] | None = None,
           default: DebugAction = NOTIFY, overrides: dict[str, DebugAction] | None = None,
           max_states: int = DEFAULT_STATE_CAP) -> EvolveResult:
    """Gate an edited model through analysis, then patch the running system.

    A rejected model leaves the system untouched. An accepted one is applied
    as one transaction inside a quiesce/resume window.
    """
    new_arch = canonicalize(new_arch)
    report = analyze(new_arch, max_states)
    if not report.gate_passed:
        return EvolveResult(False, report)
    new_plan = plan(report, default, overrides)
    weave(new_plan, new_arch)
    model_diff = diff(system.model, system.plan, new_arch, new_plan)

    scripts = dict(scripts or {})
    for op in model_diff:
        if isinstance(op, AddComponent) and op.component.in_ports:
            name = op.component.name
            if name not in scripts and name not in system.scripts:
                raise DeploymentError(f"new component {name!r} has in ports but no behavior script")

    was_running = system.status is Status.RUNNING
    if was_running:
        system.quiesce()
    try:
        system.apply_ops(list(model_diff), scripts)
        system.model = new_arch
        system.plan = new_plan
    finally:
        if was_running:
            system.resume()
    return EvolveResult(True, report, new_plan, model_diff)
