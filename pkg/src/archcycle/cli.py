"""Command line driving the design / check / deploy / debug / evolve cycle.

Exit codes: 0 success or gate passed, 1 analysis failure or runtime
violation, 2 usage, file or parse errors.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from importlib import resources

from filelock import Timeout

from .analysis import AnalysisError, Kind, analyze
from .debugger import DebugSession
from .debugplan import plan, weave
from .lexer import ParseFailure
from .model import ModelError
from .ops import describe, op_to_json
from .runtime import DeploymentError, ScriptError, instantiate
from .sync import evolve
from .workspace import ENV_VAR, Workspace, WorkspaceError

OK, FAILED, USAGE = 0, 1, 2


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _emit(args, payload, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _load_model(ws: Workspace, path: str):
    try:
        return ws.read_model(path)
    except FileNotFoundError:
        raise _Exit(USAGE, f"no such model file: {path}") from None
    except ParseFailure as exc:
        raise _Exit(USAGE, "\n".join(f"{path}:{e}" for e in exc.errors)) from None


def cmd_check(args, ws: Workspace) -> int:
    arch = _load_model(ws, args.model)
    report = analyze(arch, ws.config.state_cap)
    _emit(args, report.to_json(), report.render())
    return OK if report.gate_passed else FAILED


_SKELETON_HEAD = "// Behavior skeleton for {name}: uncomment and complete the stubs.\nscript {name} {{\n"


def skeleton(comp) -> str:
    outs = [p.name for p in comp.out_ports]
    lines = [_SKELETON_HEAD.format(name=comp.name)]
    for p in comp.in_ports:
        stub = f"on {p.name} emit {outs[0]} size=size type=type" if outs else f"on {p.name}"
        lines.append(f"  // {stub}\n")
    for p in comp.out_ports:
        lines.append(f'  // source {p.name} size=1kB type="{p.data_type}"\n')
    lines.append("}\n")
    return "".join(lines)


def cmd_scaffold(args, ws: Workspace) -> int:
    arch = _load_model(ws, args.model)
    written, kept = [], []
    for comp in arch.components:
        if not comp.ports:
            continue
        path = ws.script_path(comp)
        if path.exists():
            kept.append(str(path))
            continue
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(skeleton(comp), encoding="utf-8")
        written.append(str(path))
    text = "\n".join(f"wrote {p}" for p in written) or "all components already have scripts; nothing written"
    _emit(args, {"written": written, "existing": kept}, text)
    return OK


def cmd_deploy(args, ws: Workspace) -> int:
    arch = _load_model(ws, args.model)
    seed = args.seed if args.seed is not None else ws.config.seed
    report = analyze(arch, ws.config.state_cap)
    if not report.gate_passed:
        bad = report.of_kind(Kind.INCOMPATIBLE)
        raise _Exit(FAILED, "deployment refused, incompatible interactions remain:\n"
                    + "\n".join(f"  {v.subject}: {v.reason}" for v in bad))
    debug_plan = plan(report, ws.config.default_action, ws.config.actions)
    config = weave(debug_plan, arch)
    system = instantiate(arch, config, ws.scripts_for(arch), seed, plan=debug_plan, report=report)
    ws.save_system(system)
    ws.construction_file.write_text(
        json.dumps([op_to_json(op) for op in system.construction_log], indent=1, sort_keys=True), encoding="utf-8")
    ws.reset_trace()
    log = "\n".join(f"  {describe(op)}" for op in system.construction_log)
    ws.append_report(f"deploy {args.model} (seed {seed})",
                     f"{report.render()}\n\nconstruction sequence ({len(system.construction_log)} operations):\n{log}")
    _emit(args, {"report": report.to_json(), "plan": debug_plan.to_json(),
                 "construction_log": [op_to_json(op) for op in system.construction_log]},
          f"{report.render()}\ndeployed {len(system.instances)} components, {len(system.bindings)} connectors, "
          f"{len(system.probes)} probes (seed {seed})")
    return OK


def cmd_run(args, ws: Workspace) -> int:
    system = ws.load_system()
    scenario = ws.scenario(args.scenario)
    session = DebugSession(system, ws.reconfigurations(), ws.scripts_for, ws.root,
                           ws.config.default_action, ws.config.actions)
    result = session.run(scenario)
    ws.append_trace(result.trace)
    ws.save_system(system)
    lines = [f"scenario {scenario.name}: {len(result.trace)} trace entries, "
             f"{len(result.outcomes)} checks, {len(result.violations)} violations, {len(result.errors)} errors"]
    lines += [f"- {o.check} at tick {o.tick}: {o.result}" + (f" ({o.message})" if o.message else "")
              for o in result.outcomes]
    lines += [f"- notified: {n}" for n in result.notifications]
    body = "\n".join(lines)
    ws.append_report(f"run {scenario.name}", body)
    _emit(args, {"scenario": scenario.name, "outcomes": [o.to_json() for o in result.outcomes],
                 "violations": len(result.violations), "effects": result.effects,
                 "notifications": result.notifications}, body)
    return FAILED if result.violations or result.errors else OK


def cmd_events(args, ws: Workspace) -> int:
    if not ws.deployed:
        raise WorkspaceError("nothing is deployed in this workspace; run `deploy` first")
    lines = ws.read_trace()
    if args.kind:
        lines = [ln for ln in lines if json.loads(ln)["kind"] == args.kind]
    if args.tail is not None:
        lines = lines[-args.tail:] if args.tail > 0 else []
    for ln in lines:
        print(ln)
    return OK


def cmd_status(args, ws: Workspace) -> int:
    system = ws.load_system()
    info = system.describe()
    text = [f"status: {info['status']}  clock: {info['clock']}",
            f"components ({len(info['components'])}): {', '.join(info['components'])}",
            f"bindings ({len(info['bindings'])}):"]
    text += [f"  {cid}: {desc}" for cid, desc in info["bindings"].items()]
    text.append(f"probes ({len(info['probes'])}):")
    text += [f"  {pid} on {conn}" for pid, conn in info["probes"].items()]
    _emit(args, info, "\n".join(text))
    return OK


def cmd_evolve(args, ws: Workspace) -> int:
    system = ws.load_system()
    new_arch = _load_model(ws, args.model)
    result = evolve(system, new_arch, ws.scripts_for(new_arch), ws.config.default_action,
                    ws.config.actions, ws.config.state_cap)
    verdict = "accepted" if result.accepted else "rejected"
    body = f"evolution {verdict}\n\n{result.report.render()}\n\ndiff:\n{result.diff.render()}"
    ws.append_report(f"evolve {args.model}", body)
    if result.accepted:
        ws.save_system(system)
    _emit(args, result.to_json(), body)
    return OK if result.accepted else FAILED


def cmd_example(args, ws: Workspace) -> int:
    """Copy the bundled health-record example into the workspace."""
    src = resources.files("archcycle") / "corpus"
    copied = []
    for item in ("phr.adl", "phr-bad-auth.adl", "phr-with-converter.adl"):
        dest = ws.root / item
        if not dest.exists():
            dest.write_bytes((src / item).read_bytes())
            copied.append(item)
    for sub in ("scripts", "scenarios", "reconfigurations"):
        (ws.root / sub).mkdir(parents=True, exist_ok=True)
        for entry in (src / sub).iterdir():
            dest = ws.root / sub / entry.name
            if not dest.exists():
                dest.write_bytes(entry.read_bytes())
                copied.append(f"{sub}/{entry.name}")
    if args.no_scripts:
        shutil.rmtree(ws.root / "scripts", ignore_errors=True)
    _emit(args, {"copied": copied}, "\n".join(f"copied {c}" for c in copied) or "example already present")
    return OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workspace", "-w", default=argparse.SUPPRESS,
                        help=f"workspace root (default: ${ENV_VAR} or the current directory)")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed for deployment")

    parser = argparse.ArgumentParser(prog="archcycle", parents=[common],
                                     description="Design, check, deploy, debug and evolve component architectures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="statically analyse a model")
    p.add_argument("model")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("scaffold", parents=[common], help="write behavior script skeletons")
    p.add_argument("model")
    p.set_defaults(func=cmd_scaffold, locked=True)
    p = sub.add_parser("deploy", parents=[common], help="analyse, plan, weave and instantiate a model")
    p.add_argument("model")
    p.set_defaults(func=cmd_deploy, locked=True)
    p = sub.add_parser("run", parents=[common], help="run a scenario against the deployed system")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run, locked=True)
    p = sub.add_parser("events", parents=[common], help="print the recorded trace as JSON lines")
    p.add_argument("--tail", type=int, default=None)
    p.add_argument("--kind", choices=["message", "event", "stimulus", "context"])
    p.set_defaults(func=cmd_events)
    p = sub.add_parser("status", parents=[common], help="show the runtime view")
    p.set_defaults(func=cmd_status)
    p = sub.add_parser("evolve", parents=[common], help="propagate an edited model to the deployed system")
    p.add_argument("model")
    p.set_defaults(func=cmd_evolve, locked=True)
    p = sub.add_parser("example", parents=[common], help="copy the bundled health-record example")
    p.add_argument("--no-scripts", action="store_true", help="leave out behavior scripts (to try scaffold)")
    p.set_defaults(func=cmd_example, locked=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.json = getattr(args, "json", False)
    args.seed = getattr(args, "seed", None)
    ws = None
    try:
        ws = Workspace(getattr(args, "workspace", None))
        if getattr(args, "locked", False):
            with ws.lock():
                return args.func(args, ws)
        return args.func(args, ws)
    except _Exit as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except Timeout:
        print(f"workspace {ws.root} is locked by another command", file=sys.stderr)
        return USAGE
    except (WorkspaceError, ParseFailure, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (AnalysisError, DeploymentError, ScriptError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
