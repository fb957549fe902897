"""Resume deferred checks on reified events and carry out the configured actions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .analysis import Variable
from .debugplan import NOTIFY, DebugAction, DebugPlan, ResidualCheck
from .model import Architecture
from .runtime import RunningSystem, Scenario

_VIOLATION_TEXT = {
    Variable.SIZE: "data too large",
    Variable.TYPE: "data type not allowed",
    Variable.LATENCY: "latency bound exceeded",
}


class ActionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CheckOutcome:
    check: str
    probe: str
    connector: str
    tick: int
    result: str  # pass | violation | error
    captured: dict = field(default_factory=dict, compare=False)
    message: str | None = None

    @property
    def violated(self) -> bool:
        return self.result == "violation"

    def to_json(self) -> dict:
        out = {"check": self.check, "probe": self.probe, "connector": self.connector, "tick": self.tick,
               "result": self.result, "captured": self.captured}
        if self.message is not None:
            out["message"] = self.message
        return out


def evaluate_check(check: ResidualCheck, captured: dict) -> tuple[str, str | None]:
    pred = check.predicate
    value = captured.get(pred.variable.value)
    if value is None:
        return "error", f"{pred.variable.value} was not captured"
    try:
        ok = pred.holds(value)
    except TypeError:
        return "error", f"cannot test {pred.describe()} on {value!r}"
    if ok:
        return "pass", None
    return "violation", f"{_VIOLATION_TEXT[pred.variable]}: {pred.variable.value}={value!r}, expected {pred.describe()}"


def resume_checks(event: dict, plan: DebugPlan) -> list[CheckOutcome]:
    """One outcome per check bound to the event's probe."""
    if plan.probe(event["probe"]) is None:
        raise KeyError(f"probe {event['probe']!r} is not part of the debug plan")
    out = []
    for check in plan.checks_for(event["probe"]):
        result, message = evaluate_check(check, event["captured"])
        out.append(CheckOutcome(check.id, check.probe, event["connector"], event["tick"], result,
                                dict(event["captured"]), message))
    return out


@dataclass
class ActionContext:
    """Where action effects land: the session report, log files, reconfiguration."""

    root: Path | None = None
    notifications: list[str] = field(default_factory=list)
    reconfigure: Callable[[str], dict] | None = None
    known_scripts: frozenset[str] | None = None

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p


def violation_record(outcome: CheckOutcome) -> dict:
    return {"check": outcome.check, "connector": outcome.connector, "tick": outcome.tick,
            "captured": outcome.captured, "result": "violation", "message": outcome.message}


def execute_action(outcome: CheckOutcome, action: DebugAction, ctx: ActionContext) -> dict:
    if not outcome.violated:
        raise ActionError(f"actions run only on violations, {outcome.check} was {outcome.result}")
    if action.kind == "notify":
        captured = ", ".join(f"{k}={v!r}" for k, v in sorted(outcome.captured.items()))
        line = f"violation of {outcome.check} on {outcome.connector} at tick {outcome.tick} ({captured}): {outcome.message}"
        ctx.notifications.append(line)
        return {"action": "notify", "check": outcome.check, "entry": line}
    if action.kind == "log":
        path = ctx.resolve(action.target)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(violation_record(outcome), sort_keys=True) + "\n")
        except OSError as exc:
            raise ActionError(f"cannot write violation log {path}: {exc}") from None
        return {"action": "log", "check": outcome.check, "path": str(path)}
    if ctx.known_scripts is not None and action.target not in ctx.known_scripts:
        raise ActionError(f"unknown reconfiguration script {action.target!r}")
    if ctx.reconfigure is None:
        raise ActionError("no reconfiguration handler available")
    effect = ctx.reconfigure(action.target)
    return {"action": "reconfigure", "check": outcome.check, "script": action.target, **effect}


@dataclass
class SessionResult:
    scenario: str
    trace: list[dict]
    outcomes: list[CheckOutcome]
    effects: list[dict]
    notifications: list[str]

    @property
    def violations(self) -> list[CheckOutcome]:
        return [o for o in self.outcomes if o.violated]

    @property
    def errors(self) -> list[CheckOutcome]:
        return [o for o in self.outcomes if o.result == "error"]


class DebugSession:
    """Drives a scenario, checking every reified event as it is dispatched.

    A reconfigure action fires at most once per scenario run; later
    violations that ask for one are only notified. The reconfiguration runs
    between deliveries: the system is quiesced, evolved and resumed, and the
    scenario continues from the current tick.
    """

    def __init__(self, system: RunningSystem, reconfigurations: dict[str, Architecture] | None = None,
                 scripts_for: Callable[[Architecture], dict] | None = None, root: Path | None = None,
                 default: DebugAction = NOTIFY, overrides: dict[str, DebugAction] | None = None):
        self.system = system
        self.reconfigurations = reconfigurations or {}
        self.scripts_for = scripts_for
        self.root = root
        self.default = default
        self.overrides = overrides or {}
        self.evolutions: list = []

    def run(self, scenario: Scenario) -> SessionResult:
        from .sync import evolve

        system = self.system
        outcomes: list[CheckOutcome] = []
        effects: list[dict] = []
        queued: list[str] = []
        state = {"reconfigured": False}
        ctx = ActionContext(self.root, known_scripts=frozenset(self.reconfigurations))

        def request(name: str) -> dict:
            queued.append(name)
            return {"status": "scheduled"}

        ctx.reconfigure = request

        def on_event(event: dict) -> None:
            for outcome in resume_checks(event, system.plan):
                outcomes.append(outcome)
                if not outcome.violated:
                    continue
                action = next(c.action for c in system.plan.checks if c.id == outcome.check)
                if action.kind == "reconfigure" and (state["reconfigured"] or queued):
                    action = NOTIFY
                effects.append(execute_action(outcome, action, ctx))

        system.listeners.append(on_event)
        start = len(system.trace)
        try:
            system.start(scenario)
            while system.step():
                while queued:
                    name = queued.pop(0)
                    state["reconfigured"] = True
                    target = self.reconfigurations[name]
                    scripts = self.scripts_for(target) if self.scripts_for else {}
                    result = evolve(system, target, scripts, self.default, self.overrides)
                    self.evolutions.append(result)
                    verdict = "accepted" if result.accepted else "rejected"
                    ctx.notifications.append(
                        f"reconfiguration {name!r} {verdict} at tick {system.clock}; scenario resumed from the current tick")
                    effects.append({"action": "reconfigure", "script": name, "status": verdict,
                                    "ops": len(result.diff) if result.accepted else 0})
        finally:
            system.listeners.remove(on_event)
        return SessionResult(scenario.name, system.trace[start:], outcomes, effects, ctx.notifications)
