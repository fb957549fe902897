"""On-disk workspace: model files, scripts, scenarios and the deployed system state."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from filelock import FileLock

from .adl import parse
from .analysis.protocols import DEFAULT_STATE_CAP
from .debugplan import NOTIFY, DebugAction
from .model import Architecture
from .runtime import BehaviorScript, RunningSystem, Scenario, parse_scenario, parse_script, trace_line

ENV_VAR = "CALICO_WORKSPACE"
STATE_DIR = ".archcycle"


class WorkspaceError(RuntimeError):
    pass


@dataclass
class Config:
    seed: int = 0
    default_action: DebugAction = NOTIFY
    state_cap: int = DEFAULT_STATE_CAP
    actions: dict[str, DebugAction] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> Config:
        if not path.exists():
            return cls()
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            return cls(
                seed=int(data.get("seed", 0)),
                default_action=DebugAction.from_json(data.get("default_action", {"kind": "notify"})),
                state_cap=int(data.get("state_cap", DEFAULT_STATE_CAP)),
                actions={k: DebugAction.from_json(v) for k, v in data.get("actions", {}).items()},
            )
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise WorkspaceError(f"{path}: invalid configuration: {exc}") from None


class Workspace:
    def __init__(self, root: str | os.PathLike | None = None):
        root = root or os.environ.get(ENV_VAR) or "."
        self.root = Path(root).resolve()
        self.config = Config.load(self.root / "workspace.json")

    # layout
    @property
    def scripts_dir(self) -> Path:
        return self.root / "scripts"

    @property
    def scenarios_dir(self) -> Path:
        return self.root / "scenarios"

    @property
    def reconfigurations_dir(self) -> Path:
        return self.root / "reconfigurations"

    @property
    def state_dir(self) -> Path:
        return self.root / STATE_DIR

    @property
    def state_file(self) -> Path:
        return self.state_dir / "state.json"

    @property
    def plan_file(self) -> Path:
        return self.state_dir / "plan.json"

    @property
    def trace_file(self) -> Path:
        return self.state_dir / "trace.jsonl"

    @property
    def construction_file(self) -> Path:
        return self.state_dir / "construction.json"

    @property
    def report_file(self) -> Path:
        return self.root / "session-report.md"

    def lock(self) -> FileLock:
        self.state_dir.mkdir(parents=True, exist_ok=True)
        return FileLock(str(self.state_dir / "lock"), timeout=0)

    def resolve(self, path: str | os.PathLike) -> Path:
        p = Path(path)
        if p.is_absolute() or p.exists():
            return p
        return self.root / p

    def read_model(self, path: str | os.PathLike) -> Architecture:
        return parse(self.resolve(path).read_text(encoding="utf-8"))

    # scripts and scenarios
    def script_path(self, component) -> Path:
        if component.script:
            return self.resolve(component.script)
        return self.scripts_dir / f"{component.name}.script"

    def scripts_for(self, arch: Architecture) -> dict[str, BehaviorScript]:
        out = {}
        for comp in arch.components:
            path = self.script_path(comp)
            if path.exists():
                script = parse_script(path.read_text(encoding="utf-8"))
                if script.component != comp.name:
                    raise WorkspaceError(f"{path} scripts {script.component!r}, expected {comp.name!r}")
                out[comp.name] = script
        return out

    def scenario(self, name: str) -> Scenario:
        path = self.scenarios_dir / f"{name}.scenario"
        if not path.exists():
            path = self.resolve(name)
        if not path.exists():
            raise WorkspaceError(f"no scenario named {name!r}")
        return parse_scenario(path.read_text(encoding="utf-8"))

    def reconfigurations(self) -> dict[str, Architecture]:
        if not self.reconfigurations_dir.is_dir():
            return {}
        return {p.stem: parse(p.read_text(encoding="utf-8"))
                for p in sorted(self.reconfigurations_dir.glob("*.adl"))}

    # deployed system
    @property
    def deployed(self) -> bool:
        return self.state_file.exists()

    def load_system(self) -> RunningSystem:
        if not self.deployed:
            raise WorkspaceError("nothing is deployed in this workspace; run `deploy` first")
        return RunningSystem.from_json(json.loads(self.state_file.read_text(encoding="utf-8")))

    def save_system(self, system: RunningSystem) -> None:
        self.state_dir.mkdir(parents=True, exist_ok=True)
        tmp = self.state_file.with_suffix(".tmp")
        tmp.write_text(json.dumps(system.to_json(), indent=1, sort_keys=True), encoding="utf-8")
        tmp.replace(self.state_file)
        self.plan_file.write_text(system.plan.dumps() + "\n", encoding="utf-8")

    def reset_trace(self) -> None:
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.trace_file.write_text("", encoding="utf-8")

    def append_trace(self, entries: list[dict]) -> None:
        with self.trace_file.open("a", encoding="utf-8") as fh:
            for e in entries:
                fh.write(trace_line(e) + "\n")

    def read_trace(self) -> list[str]:
        if not self.trace_file.exists():
            return []
        return self.trace_file.read_text(encoding="utf-8").splitlines()

    def append_report(self, title: str, body: str) -> None:
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        with self.report_file.open("a", encoding="utf-8") as fh:
            fh.write(f"## {stamp} {title}\n\n{body.rstrip()}\n\n")
