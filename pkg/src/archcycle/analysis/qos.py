"""Latency prediction over the port graph: sum along a path, max where paths meet."""

from __future__ import annotations

import math
from graphlib import CycleError, TopologicalSorter

from ..model import TOP, Architecture, Endpoint, QoSContract
from .verdicts import AnalysisError, ResidualPredicate, Verdict

ANALYSIS = "qos"


def _port_graph(arch: Architecture) -> dict[Endpoint, list[Endpoint]]:
    edges: dict[Endpoint, list[Endpoint]] = {}
    for k in arch.connectors:
        edges.setdefault(k.source, []).append(k.target)
    for comp in arch.components:
        outs = [Endpoint(comp.name, p.name) for p in comp.out_ports]
        for p in comp.in_ports:
            edges.setdefault(Endpoint(comp.name, p.name), []).extend(outs)
    return edges


def _reach(starts, edges) -> set[Endpoint]:
    seen = set(starts)
    stack = list(starts)
    while stack:
        for nxt in edges.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def predict(arch: Architecture) -> dict[Endpoint, tuple[float, float]]:
    """(lower, upper) predicted latency at every port between an offered and a required port.

    Unknown offered latencies count as 0 in the lower bound and infinity in
    the upper bound. Raises AnalysisError on a cycle in that subgraph.
    """
    offered: dict[Endpoint, object] = {}
    required: list[Endpoint] = []
    for c in arch.contracts_of(QoSContract):
        if c.offered_latency is not None:
            offered[c.port] = c.offered_latency
        if c.required_max_latency is not None:
            required.append(c.port)
    edges = _port_graph(arch)
    back: dict[Endpoint, list[Endpoint]] = {}
    for src, dsts in edges.items():
        for d in dsts:
            back.setdefault(d, []).append(src)
    live = _reach(offered, edges) & _reach(required, back)
    preds = {n: [p for p in back.get(n, ()) if p in live] for n in live}
    try:
        order = list(TopologicalSorter(preds).static_order())
    except CycleError as exc:
        cycle = " -> ".join(str(e) for e in exc.args[1])
        raise AnalysisError(f"cycle in latency-annotated subgraph: {cycle}") from None

    bounds: dict[Endpoint, tuple[float, float]] = {}
    for node in order:
        lo = max((bounds[p][0] for p in preds[node]), default=0)
        hi = max((bounds[p][1] for p in preds[node]), default=0)
        own = offered.get(node)
        if own is TOP:
            hi = math.inf
        elif own is not None:
            lo += own
            hi += own
        bounds[node] = (lo, hi)
    return bounds


def check_qos(arch: Architecture) -> list[Verdict]:
    contracts = [c for c in arch.contracts_of(QoSContract) if c.required_max_latency is not None]
    if not contracts:
        return []
    bounds = predict(arch)
    verdicts = []
    for c in sorted(contracts, key=lambda c: str(c.port)):
        limit = c.required_max_latency
        feeding = sorted((k for k in arch.connectors if k.target == c.port), key=lambda k: k.id)
        if not feeding:
            continue
        per = [(k.id, bounds.get(k.source, (0, 0))) for k in feeding]
        lo = max(b[0] for _, b in per)
        hi = max(b[1] for _, b in per)
        subject = str(c.port)
        if lo > limit:
            verdicts.append(Verdict.incompatible(
                ANALYSIS, subject, f"predicted latency at least {lo:g} ms exceeds {limit:g} ms"))
        elif hi <= limit:
            verdicts.append(Verdict.compatible(ANALYSIS, subject))
        else:
            verdicts.append(Verdict.partial(
                ANALYSIS, subject,
                [ResidualPredicate.latency_at_most(cid, limit) for cid, b in per if b[1] > limit]))
    return verdicts
