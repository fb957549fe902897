"""Turn partially compatible verdicts into runtime probes and checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .analysis import AnalysisReport, Kind, ResidualPredicate, Variable
from .model import Architecture


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class DebugAction:
    """What to do when a check fails: notify, log to a file, or reconfigure."""

    kind: str = "notify"
    target: str | None = None  # log file path or reconfiguration script name

    def __post_init__(self):
        if self.kind not in ("notify", "log", "reconfigure"):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind != "notify" and not self.target:
            raise ValueError(f"{self.kind} action needs a target")

    def to_json(self) -> dict:
        if self.kind == "log":
            return {"kind": "log", "path": self.target}
        if self.kind == "reconfigure":
            return {"kind": "reconfigure", "script": self.target}
        return {"kind": "notify"}

    @classmethod
    def from_json(cls, data: dict) -> DebugAction:
        return cls(data["kind"], data.get("path") or data.get("script"))


NOTIFY = DebugAction()


@dataclass(frozen=True)
class Probe:
    id: str
    connector: str
    captures: frozenset[Variable]

    def to_json(self) -> dict:
        return {"id": self.id, "connector": self.connector, "captures": sorted(v.value for v in self.captures)}

    @classmethod
    def from_json(cls, data: dict) -> Probe:
        return cls(data["id"], data["connector"], frozenset(Variable(v) for v in data["captures"]))


@dataclass(frozen=True)
class ResidualCheck:
    id: str
    probe: str
    predicate: ResidualPredicate
    action: DebugAction = NOTIFY

    def to_json(self) -> dict:
        return {"id": self.id, "probe": self.probe, "predicate": self.predicate.to_json(), "action": self.action.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> ResidualCheck:
        return cls(data["id"], data["probe"], ResidualPredicate.from_json(data["predicate"]),
                   DebugAction.from_json(data["action"]))


@dataclass(frozen=True)
class DebugPlan:
    probes: tuple[Probe, ...] = ()
    checks: tuple[ResidualCheck, ...] = ()

    def probe(self, pid: str) -> Probe | None:
        for p in self.probes:
            if p.id == pid:
                return p
        return None

    def checks_for(self, pid: str) -> list[ResidualCheck]:
        return [c for c in self.checks if c.probe == pid]

    def to_json(self) -> dict:
        return {"probes": [p.to_json() for p in self.probes], "checks": [c.to_json() for c in self.checks]}

    @classmethod
    def from_json(cls, data: dict) -> DebugPlan:
        return cls(tuple(Probe.from_json(p) for p in data["probes"]),
                   tuple(ResidualCheck.from_json(c) for c in data["checks"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def probe_id(connector: str) -> str:
    return f"probe_{connector}"


def check_id(connector: str, variable: Variable) -> str:
    return f"{connector}.{variable.value.lower()}"


def plan(report: AnalysisReport, default: DebugAction = NOTIFY,
         overrides: dict[str, DebugAction] | None = None) -> DebugPlan:
    """One probe per connector that carries a residual, one check per residual."""
    if not report.gate_passed:
        bad = ", ".join(v.subject for v in report.of_kind(Kind.INCOMPATIBLE))
        raise PlanError(f"cannot plan runtime checks while incompatible interactions remain: {bad}")
    overrides = overrides or {}
    by_conn: dict[str, list[ResidualPredicate]] = {}
    for r in report.residuals:
        by_conn.setdefault(r.connector, []).append(r)
    probes, checks = [], []
    for conn in sorted(by_conn):
        preds = sorted(by_conn[conn], key=lambda r: (r.variable.value, r.test, repr(r.bound)))
        pid = probe_id(conn)
        probes.append(Probe(pid, conn, frozenset(r.variable for r in preds)))
        used: dict[str, int] = {}
        for r in preds:
            cid = check_id(conn, r.variable)
            used[cid] = used.get(cid, 0) + 1
            if used[cid] > 1:
                cid = f"{cid}{used[cid]}"
            checks.append(ResidualCheck(cid, pid, r, overrides.get(cid, default)))
    return DebugPlan(tuple(probes), tuple(checks))


@dataclass(frozen=True)
class InterceptionPoint:
    """Where a probe observes traffic: message delivery at a connector's target port."""

    probe: str
    connector: str
    component: str
    port: str
    captures: frozenset[Variable]
    at: str = "delivery"

    def to_json(self) -> dict:
        return {"probe": self.probe, "connector": self.connector, "component": self.component,
                "port": self.port, "captures": sorted(v.value for v in self.captures), "at": self.at}

    @classmethod
    def from_json(cls, data: dict) -> InterceptionPoint:
        return cls(data["probe"], data["connector"], data["component"], data["port"],
                   frozenset(Variable(v) for v in data["captures"]), data.get("at", "delivery"))


@dataclass(frozen=True)
class DeploymentConfig:
    points: tuple[InterceptionPoint, ...] = field(default=())

    def to_json(self) -> dict:
        return {"interception_points": [p.to_json() for p in self.points]}

    @classmethod
    def from_json(cls, data: dict) -> DeploymentConfig:
        return cls(tuple(InterceptionPoint.from_json(p) for p in data["interception_points"]))


def intercept(probe: Probe, arch: Architecture) -> InterceptionPoint:
    k = arch.connector(probe.connector)
    if k is None:
        raise PlanError(f"probe {probe.id} references unknown connector {probe.connector!r}")
    return InterceptionPoint(probe.id, k.id, k.target.component, k.target.port, probe.captures)


def weave(debug_plan: DebugPlan, arch: Architecture) -> DeploymentConfig:
    """Overlay interception points on the deployment; the model is not touched."""
    points = [intercept(p, arch) for p in debug_plan.probes]
    return DeploymentConfig(tuple(sorted(points, key=lambda p: p.connector)))
