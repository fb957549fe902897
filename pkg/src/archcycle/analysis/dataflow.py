"""Worklist propagation of size/type facts and per-connector classification."""

from __future__ import annotations

from collections import deque

from ..model import (
    TOP,
    Architecture,
    DataConstraints,
    DataFacts,
    DataflowContract,
    Endpoint,
)
from .verdicts import ResidualPredicate, Verdict

ANALYSIS = "dataflow"


def propagate(arch: Architecture) -> dict[Endpoint, DataFacts | None]:
    """Facts at every out port; None is bottom (nothing is ever sent).

    A declared ``produces`` fixes a port. Otherwise the port carries the join
    of everything delivered to its component, or TOP when no connector feeds
    the component at all.
    """
    declared: dict[Endpoint, DataFacts] = {}
    for c in arch.contracts_of(DataflowContract):
        if c.produced is not None:
            declared[c.port] = c.produced

    feeds: dict[str, list[Endpoint]] = {}     # component -> source out ports feeding it
    readers: dict[str, set[str]] = {}         # component -> components it feeds
    for k in arch.connectors:
        feeds.setdefault(k.target.component, []).append(k.source)
        readers.setdefault(k.source.component, set()).add(k.target.component)

    facts: dict[Endpoint, DataFacts | None] = {}
    for comp in arch.components:
        source = comp.name not in feeds
        for p in comp.out_ports:
            ep = Endpoint(comp.name, p.name)
            facts[ep] = declared.get(ep, DataFacts.top() if source else None)

    order = [c.name for c in arch.components]
    work = deque(order)
    queued = set(order)
    outs = {c.name: [Endpoint(c.name, p.name) for p in c.out_ports] for c in arch.components}
    while work:
        name = work.popleft()
        queued.discard(name)
        if name not in feeds:
            continue
        incoming = None
        for src in feeds[name]:
            f = facts.get(src)
            if f is not None:
                incoming = f if incoming is None else incoming.join(f)
        changed = False
        for ep in outs[name]:
            if ep in declared or facts[ep] == incoming:
                continue
            facts[ep] = incoming
            changed = True
        if changed:
            for nxt in sorted(readers.get(name, ())):
                if nxt not in queued:
                    queued.add(nxt)
                    work.append(nxt)
    return facts


def classify(connector: str, facts: DataFacts | None, limits: DataConstraints) -> Verdict:
    """Compare what may arrive on ``connector`` with what its target accepts."""
    if facts is None:
        return Verdict.compatible(ANALYSIS, connector)
    residuals = []
    empty = []
    if limits.max_size is not None:
        m = limits.max_size
        if facts.size_lo > m:
            empty.append(f"size at least {facts.size_lo} B exceeds max_size {m} B")
        elif facts.size_hi is TOP or facts.size_hi > m:
            residuals.append(ResidualPredicate.size_at_most(connector, m))
    if limits.allowed_types is not None:
        allowed = limits.allowed_types
        if facts.types is TOP:
            residuals.append(ResidualPredicate.type_in(connector, allowed))
        elif not facts.types & allowed:
            empty.append(f"types {{{', '.join(sorted(facts.types))}}} are all outside {{{', '.join(sorted(allowed))}}}")
        elif not facts.types <= allowed:
            residuals.append(ResidualPredicate.type_in(connector, allowed))
    if empty:
        return Verdict.incompatible(ANALYSIS, connector, "; ".join(empty))
    if residuals:
        return Verdict.partial(ANALYSIS, connector, residuals)
    return Verdict.compatible(ANALYSIS, connector)


def check_dataflow(arch: Architecture) -> list[Verdict]:
    limits: dict[Endpoint, DataConstraints] = {}
    for c in arch.contracts_of(DataflowContract):
        if c.constraints is not None:
            limits[c.port] = c.constraints
    if not limits:
        return []
    facts = propagate(arch)
    return [
        classify(k.id, facts.get(k.source), limits[k.target])
        for k in sorted(arch.connectors, key=lambda k: k.id)
        if k.target in limits
    ]


__all__ = ["propagate", "classify", "check_dataflow"]
