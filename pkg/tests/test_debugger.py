from __future__ import annotations

import json
from dataclasses import replace

import pytest

from archcycle.adl import parse
from archcycle.analysis import analyze
from archcycle.debugger import (
    ActionContext,
    ActionError,
    CheckOutcome,
    DebugSession,
    execute_action,
    resume_checks,
)
from archcycle.debugplan import DebugAction, DebugPlan, Probe, plan, weave
from archcycle.runtime import Scenario, instantiate

from conftest import corpus_text, load_scenario

MB = 10**6


def _event(size, kind, probe="probe_gs_pda"):
    return {"kind": "event", "tick": 4, "probe": probe, "connector": "gs_pda",
            "captured": {"Size": size, "Type": kind}}


def deploy(arch, scripts, overrides=None):
    report = analyze(arch)
    p = plan(report, overrides=overrides)
    return instantiate(arch, weave(p, arch), scripts, 1, plan=p, report=report)


def test_small_text_passes(phr):
    outcomes = resume_checks(_event(2 * MB, "txt"), plan(analyze(phr)))
    assert [o.result for o in outcomes] == ["pass", "pass"]


def test_large_image_violates_size_only(phr):
    outcomes = {o.check: o for o in resume_checks(_event(50 * MB, "jpg"), plan(analyze(phr)))}
    assert outcomes["gs_pda.size"].result == "violation"
    assert "data too large" in outcomes["gs_pda.size"].message
    assert outcomes["gs_pda.type"].result == "pass"


def test_wrong_type_violates(phr):
    outcomes = {o.check: o for o in resume_checks(_event(1, "dicom"), plan(analyze(phr)))}
    assert outcomes["gs_pda.type"].result == "violation"


def test_missing_capture_is_an_error(phr):
    event = _event(5, "txt")
    del event["captured"]["Size"]
    outcomes = {o.check: o for o in resume_checks(event, plan(analyze(phr)))}
    assert outcomes["gs_pda.size"].result == "error"
    assert outcomes["gs_pda.type"].result == "pass"


def test_probe_without_checks():
    p = DebugPlan((Probe("probe_x", "x", frozenset()),), ())
    assert resume_checks(_event(1, "txt", probe="probe_x"), p) == []


def _violation(phr) -> CheckOutcome:
    return next(o for o in resume_checks(_event(50 * MB, "jpg"), plan(analyze(phr))) if o.violated)


def test_notify_names_check_connector_and_values(phr):
    ctx = ActionContext()
    execute_action(_violation(phr), DebugAction("notify"), ctx)
    (line,) = ctx.notifications
    assert "gs_pda.size" in line and "gs_pda" in line and "50000000" in line


def test_log_appends_one_line(phr, tmp_path):
    ctx = ActionContext(root=tmp_path)
    log = tmp_path / "violations.jsonl"
    log.write_text('{"old": 1}\n')
    execute_action(_violation(phr), DebugAction("log", "violations.jsonl"), ctx)
    lines = log.read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[-1])["check"] == "gs_pda.size"


def test_actions_only_run_on_violations(phr):
    passing = resume_checks(_event(1, "txt"), plan(analyze(phr)))[0]
    with pytest.raises(ActionError):
        execute_action(passing, DebugAction("notify"), ActionContext())


def test_unknown_reconfiguration_script(phr):
    ctx = ActionContext(known_scripts=frozenset({"other"}), reconfigure=lambda name: {})
    with pytest.raises(ActionError):
        execute_action(_violation(phr), DebugAction("reconfigure", "insert-dataconverter"), ctx)


RECONFIGURE = {"gs_pda.size": DebugAction("reconfigure", "insert-dataconverter")}


def test_session_reports_druggist_and_radiologist(phr, scripts):
    system = deploy(phr, scripts)
    druggist = DebugSession(system).run(load_scenario("druggist"))
    assert druggist.violations == [] and len(druggist.outcomes) == 4
    radiologist = DebugSession(system).run(load_scenario("radiologist"))
    (violation,) = radiologist.violations
    assert violation.check == "gs_pda.size"
    assert len(radiologist.notifications) == 1


def test_reconfigure_evolves_the_system(phr, phr_converter, scripts):
    system = deploy(phr, scripts, RECONFIGURE)
    session = DebugSession(system, {"insert-dataconverter": phr_converter}, lambda arch: scripts)
    result = session.run(load_scenario("radiologist"))
    assert len(result.violations) == 1
    (evolution,) = session.evolutions
    assert evolution.accepted
    assert system.mirrors(phr_converter) and system.probes == {}
    assert any(e.get("status") == "accepted" for e in result.effects)


def test_rejected_reconfiguration_leaves_runtime_untouched(phr, phr_bad, scripts):
    system = deploy(phr, scripts, RECONFIGURE)
    session = DebugSession(system, {"insert-dataconverter": phr_bad}, lambda arch: scripts)
    system.run_scenario(load_scenario("druggist"))
    result = session.run(load_scenario("radiologist"))
    (evolution,) = session.evolutions
    assert not evolution.accepted
    assert system.mirrors(phr) and set(system.probes) == {"probe_gs_pda"}
    assert any(e.get("status") == "rejected" for e in result.effects)


def test_reconfigure_fires_once_per_run(phr, scripts):
    system = deploy(phr, scripts, RECONFIGURE)
    same = parse(corpus_text("phr.adl"))
    session = DebugSession(system, {"insert-dataconverter": same}, lambda arch: scripts)
    twice = load_scenario("radiologist")
    twice = Scenario("twice", twice.steps + tuple(replace(s, tick=s.tick + 3) for s in twice.steps[1:]))
    result = session.run(twice)
    assert len(result.violations) == 2
    assert len(session.evolutions) == 1
    assert any("violation of gs_pda.size" in n for n in result.notifications)


def test_soundness_over_bundled_scenarios(phr, scripts):
    system = deploy(phr, scripts)
    checks = {c.id: c for c in system.plan.checks}
    for name in ("druggist", "radiologist"):
        for outcome in DebugSession(system).run(load_scenario(name)).outcomes:
            pred = checks[outcome.check].predicate
            assert pred.holds(outcome.captured[pred.variable.value]) == (outcome.result == "pass")
