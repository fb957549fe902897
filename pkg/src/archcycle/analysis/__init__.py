"""Interaction analysis: classify every analysed interaction and gate the cycle."""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..model import Architecture, BehavioralContract, require_valid
from .dataflow import check_dataflow
from .protocols import DEFAULT_STATE_CAP, LTS, check_behavioral, compile_protocol
from .qos import check_qos
from .structural import check_structural
from .verdicts import AnalysisError, Kind, ResidualPredicate, Variable, Verdict

ANALYSIS_ORDER = ("structural", "behavioral", "dataflow", "qos")


@dataclass(frozen=True)
class AnalysisReport:
    verdicts: tuple[Verdict, ...]

    @property
    def gate_passed(self) -> bool:
        return not any(v.kind is Kind.INCOMPATIBLE for v in self.verdicts)

    def by_analysis(self) -> dict[str, list[Verdict]]:
        out: dict[str, list[Verdict]] = {name: [] for name in ANALYSIS_ORDER}
        for v in self.verdicts:
            out[v.analysis].append(v)
        return out

    def of_kind(self, kind: Kind) -> list[Verdict]:
        return [v for v in self.verdicts if v.kind is kind]

    @property
    def residuals(self) -> list[ResidualPredicate]:
        return [r for v in self.verdicts for r in v.residuals]

    def to_json(self) -> dict:
        return {"gate": self.gate_passed, "verdicts": [v.to_json() for v in self.verdicts]}

    @classmethod
    def from_json(cls, data: dict) -> AnalysisReport:
        return cls(tuple(Verdict.from_json(v) for v in data["verdicts"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def render(self) -> str:
        lines = [f"gate: {'passed' if self.gate_passed else 'FAILED'}"]
        for v in self.verdicts:
            line = f"  [{v.analysis}] {v.subject}: {v.kind.value}"
            if v.reason:
                line += f" ({v.reason})"
            lines.append(line)
            for r in v.residuals:
                lines.append(f"      runtime check on {r.connector}: {r.describe()}")
        return "\n".join(lines)


def analyze(arch: Architecture, max_states: int = DEFAULT_STATE_CAP) -> AnalysisReport:
    require_valid(arch)
    verdicts = list(check_structural(arch))
    if arch.contracts_of(BehavioralContract):
        verdicts.append(check_behavioral(arch, max_states))
    verdicts += check_dataflow(arch)
    verdicts += check_qos(arch)
    rank = {name: i for i, name in enumerate(ANALYSIS_ORDER)}
    verdicts.sort(key=lambda v: (rank[v.analysis], v.subject))
    return AnalysisReport(tuple(verdicts))


__all__ = [
    "AnalysisError",
    "AnalysisReport",
    "Kind",
    "LTS",
    "ResidualPredicate",
    "Variable",
    "Verdict",
    "analyze",
    "check_behavioral",
    "check_dataflow",
    "check_qos",
    "check_structural",
    "compile_protocol",
]
