from __future__ import annotations

from ..model import Architecture, StructuralContract, bound_endpoints
from .verdicts import Verdict

ANALYSIS = "structural"


def check_structural(arch: Architecture) -> list[Verdict]:
    """Access restrictions, mandatory bindings and connector data types.

    Connectors get one verdict each when a restriction applies to their
    target or their port types disagree; ``must_be_bound`` rules get one
    verdict keyed by the port.
    """
    restrictions: dict[str, list[frozenset[str]]] = {}
    verdicts: list[Verdict] = []
    bound = bound_endpoints(arch)
    for c in arch.contracts_of(StructuralContract):
        if c.allowed_clients is not None:
            restrictions.setdefault(str(c.subject), []).append(c.allowed_clients)
        if c.must_be_bound:
            subject = str(c.subject)
            if c.subject in bound:
                verdicts.append(Verdict.compatible(ANALYSIS, subject))
            else:
                verdicts.append(Verdict.incompatible(ANALYSIS, subject, f"port {subject} must be bound"))

    comps = {c.name: c for c in arch.components}
    for k in arch.connectors:
        reasons = []
        src = comps[k.source.component].port(k.source.port)
        dst = comps[k.target.component].port(k.target.port)
        if src.data_type != dst.data_type:
            reasons.append(f"data type mismatch: {src.data_type} -> {dst.data_type}")
        rules = restrictions.get(str(k.target), [])
        for allowed in rules:
            if k.source.component not in allowed:
                reasons.append(
                    f"caller not permitted: {k.source.component} may not use {k.target} "
                    f"(only {', '.join(sorted(allowed))})"
                )
        if reasons:
            verdicts.append(Verdict.incompatible(ANALYSIS, k.id, "; ".join(reasons)))
        elif rules:
            verdicts.append(Verdict.compatible(ANALYSIS, k.id))
    return verdicts
