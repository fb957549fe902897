from __future__ import annotations

import enum
from dataclasses import dataclass, field


class AnalysisError(Exception):
    """An analysis could not produce a verdict (cap exceeded, cycle, bad protocol)."""


class Kind(str, enum.Enum):
    COMPATIBLE = "Compatible"
    INCOMPATIBLE = "Incompatible"
    PARTIAL = "PartiallyCompatible"


class Variable(str, enum.Enum):
    SIZE = "Size"
    TYPE = "Type"
    LATENCY = "Latency"


@dataclass(frozen=True)
class ResidualPredicate:
    """A runtime test left over from static analysis.

    Size and Latency use ``LessOrEqual`` with a numeric bound; Type uses
    ``MemberOf`` with a frozenset of type tokens.
    """

    connector: str
    variable: Variable
    test: str
    bound: object

    @classmethod
    def size_at_most(cls, connector: str, limit: int) -> ResidualPredicate:
        return cls(connector, Variable.SIZE, "LessOrEqual", limit)

    @classmethod
    def type_in(cls, connector: str, allowed) -> ResidualPredicate:
        return cls(connector, Variable.TYPE, "MemberOf", frozenset(allowed))

    @classmethod
    def latency_at_most(cls, connector: str, limit: float) -> ResidualPredicate:
        return cls(connector, Variable.LATENCY, "LessOrEqual", limit)

    def holds(self, value) -> bool:
        if self.test == "MemberOf":
            return value in self.bound
        return value <= self.bound

    def describe(self) -> str:
        if self.test == "MemberOf":
            return f"{self.variable.value} in {{{', '.join(sorted(self.bound))}}}"
        return f"{self.variable.value} <= {self.bound}"

    def to_json(self) -> dict:
        bound = sorted(self.bound) if self.test == "MemberOf" else self.bound
        return {"connector": self.connector, "variable": self.variable.value, "test": self.test, "bound": bound}

    @classmethod
    def from_json(cls, data: dict) -> ResidualPredicate:
        bound = frozenset(data["bound"]) if data["test"] == "MemberOf" else data["bound"]
        return cls(data["connector"], Variable(data["variable"]), data["test"], bound)


@dataclass(frozen=True)
class Verdict:
    analysis: str
    subject: str
    kind: Kind
    reason: str | None = None
    residuals: tuple[ResidualPredicate, ...] = field(default=())

    def __post_init__(self):
        if self.kind is Kind.PARTIAL and not self.residuals:
            raise ValueError("a partially compatible verdict needs at least one residual")
        if self.kind is Kind.INCOMPATIBLE and not self.reason:
            raise ValueError("an incompatible verdict needs a reason")

    @classmethod
    def compatible(cls, analysis: str, subject: str) -> Verdict:
        return cls(analysis, subject, Kind.COMPATIBLE)

    @classmethod
    def incompatible(cls, analysis: str, subject: str, reason: str) -> Verdict:
        return cls(analysis, subject, Kind.INCOMPATIBLE, reason)

    @classmethod
    def partial(cls, analysis: str, subject: str, residuals) -> Verdict:
        return cls(analysis, subject, Kind.PARTIAL, None, tuple(residuals))

    def to_json(self) -> dict:
        out = {"analysis": self.analysis, "subject": self.subject, "kind": self.kind.value}
        if self.reason is not None:
            out["reason"] = self.reason
        if self.residuals:
            out["residuals"] = [r.to_json() for r in self.residuals]
        return out

    @classmethod
    def from_json(cls, data: dict) -> Verdict:
        return cls(
            data["analysis"],
            data["subject"],
            Kind(data["kind"]),
            data.get("reason"),
            tuple(ResidualPredicate.from_json(r) for r in data.get("residuals", ())),
        )
