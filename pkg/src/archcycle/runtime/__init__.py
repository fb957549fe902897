from .scripts import (
    BehaviorScript,
    ContextChange,
    Scenario,
    ScriptError,
    Stimulus,
    parse_scenario,
    parse_script,
)
from .system import (
    DeploymentError,
    Instance,
    RunningSystem,
    Status,
    construction_sequence,
    instantiate,
    trace_line,
)

__all__ = [
    "BehaviorScript",
    "ContextChange",
    "DeploymentError",
    "Instance",
    "RunningSystem",
    "Scenario",
    "ScriptError",
    "Status",
    "Stimulus",
    "construction_sequence",
    "instantiate",
    "parse_scenario",
    "parse_script",
    "trace_line",
]
