"""Protocol compilation to labelled transition systems and deadlock search."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..model import (
    Action,
    ActionKind,
    Architecture,
    BehavioralContract,
    Choice,
    Component,
    ProcessTerm,
    Seq,
    Star,
)
from .verdicts import AnalysisError, Verdict

ANALYSIS = "behavioral"
DEFAULT_STATE_CAP = 10**6

Label = tuple[str, ActionKind]  # (connector id, send|receive)


@dataclass(frozen=True)
class LTS:
    """States are ``range(n_states)``; state 0 is initial."""

    n_states: int
    finals: frozenset[int]
    transitions: tuple[tuple[int, Label, int], ...]
    initial: int = 0

    @property
    def states(self) -> range:
        return range(self.n_states)

    def successors(self) -> list[list[tuple[Label, int]]]:
        out: list[list[tuple[Label, int]]] = [[] for _ in range(self.n_states)]
        for s, label, t in self.transitions:
            out[s].append((label, t))
        return out


def _positions(term: ProcessTerm, acts: list[Action], follow: dict[int, set[int]]):
    """Return (nullable, first, last) over numbered action positions."""
    if isinstance(term, Action):
        acts.append(term)
        p = len(acts)
        follow[p] = set()
        return False, {p}, {p}
    if isinstance(term, Seq):
        n1, f1, l1 = _positions(term.first, acts, follow)
        n2, f2, l2 = _positions(term.second, acts, follow)
        for x in l1:
            follow[x] |= f2
        return n1 and n2, f1 | f2 if n1 else f1, l2 | l1 if n2 else l2
    if isinstance(term, Choice):
        n1, f1, l1 = _positions(term.left, acts, follow)
        n2, f2, l2 = _positions(term.right, acts, follow)
        return n1 or n2, f1 | f2, l1 | l2
    if isinstance(term, Star):
        _, f, l = _positions(term.body, acts, follow)
        for x in l:
            follow[x] |= f
        return True, f, l
    return True, set(), set()


def port_automaton(term: ProcessTerm) -> tuple[int, frozenset[int], list[tuple[int, Action, int]]]:
    """Epsilon-free position automaton of ``term`` labelled by port actions."""
    acts: list[Action] = []
    follow: dict[int, set[int]] = {}
    nullable, first, last = _positions(term, acts, follow)
    trans = [(0, acts[p - 1], p) for p in sorted(first)]
    for x in sorted(follow):
        trans += [(x, acts[y - 1], y) for y in sorted(follow[x])]
    finals = set(last) | ({0} if nullable else set())
    return len(acts) + 1, frozenset(finals), trans


def _bound_connectors(arch: Architecture) -> dict[tuple[str, str, ActionKind], list[str]]:
    """Connector ids per (component, port, action kind), sorted by id."""
    out: dict[tuple[str, str, ActionKind], list[str]] = {}
    for k in sorted(arch.connectors, key=lambda k: k.id):
        out.setdefault((k.source.component, k.source.port, ActionKind.SEND), []).append(k.id)
        out.setdefault((k.target.component, k.target.port, ActionKind.RECEIVE), []).append(k.id)
    return out


def compile_protocol(term: ProcessTerm, component: Component, arch: Architecture,
                     bound: dict[tuple[str, str, ActionKind], list[str]] | None = None) -> LTS:
    """Compile ``term`` and relabel port actions with the connectors bound to them.

    A port bound by several connectors yields one transition per connector.
    """
    if bound is None:
        bound = _bound_connectors(arch)
    n, finals, trans = port_automaton(term)
    relabelled = []
    for s, act, t in trans:
        conns = bound.get((component.name, act.port, act.kind))
        if not conns:
            raise AnalysisError(f"protocol of {component.name} uses unbound port {act.port!r}")
        relabelled += [(s, (cid, act.kind), t) for cid in conns]
    return LTS(n, finals, tuple(relabelled))


def compile_all(arch: Architecture) -> dict[str, LTS]:
    bound = _bound_connectors(arch)
    comps = {c.name: c for c in arch.components}
    out = {}
    for c in sorted(arch.contracts_of(BehavioralContract), key=lambda c: c.component):
        out[c.component] = compile_protocol(c.protocol, comps[c.component], arch, bound)
    return out


def _format_state(names: list[str], state: tuple[int, ...]) -> str:
    return "(" + ", ".join(f"{n}={s}" for n, s in zip(names, state)) + ")"


def find_deadlock(arch: Architecture, max_states: int = DEFAULT_STATE_CAP) -> str | None:
    """Breadth-first search of the synchronized product.

    A send and a receive on the same connector move together when both ends
    carry protocols; actions whose peer has no protocol move alone.
    Returns a description of the first deadlocked state, or None.
    """
    ltss = compile_all(arch)
    names = sorted(ltss)
    if not names:
        return None
    index = {n: i for i, n in enumerate(names)}
    succ = [ltss[n].successors() for n in names]
    finals = [ltss[n].finals for n in names]

    peer_of: dict[tuple[str, ActionKind], int | None] = {}
    for k in arch.connectors:
        src, dst = index.get(k.source.component), index.get(k.target.component)
        if src is not None and dst is not None and src != dst:
            peer_of[(k.id, ActionKind.SEND)] = dst
            peer_of[(k.id, ActionKind.RECEIVE)] = src
    partner = {ActionKind.SEND: ActionKind.RECEIVE, ActionKind.RECEIVE: ActionKind.SEND}

    start = tuple(ltss[n].initial for n in names)
    seen = {start}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        moved = False
        for i, local in enumerate(state):
            for (cid, kind), nxt in succ[i][local]:
                peer = peer_of.get((cid, kind))
                if peer is None:
                    targets = [(i, nxt, None, None)]
                elif kind is ActionKind.SEND:
                    want = (cid, partner[kind])
                    targets = [(i, nxt, peer, t) for lab, t in succ[peer][state[peer]] if lab == want]
                else:
                    continue  # receives with a protocol-carrying sender move with the send
                for a, na, b, nb in targets:
                    moved = True
                    new = list(state)
                    new[a] = na
                    if b is not None:
                        new[b] = nb
                    new = tuple(new)
                    if new not in seen:
                        if len(seen) >= max_states:
                            raise AnalysisError(f"behavioral state space exceeds cap of {max_states} states")
                        seen.add(new)
                        queue.append(new)
        if not moved and not all(s in f for s, f in zip(state, finals)):
            return _format_state(names, state)
    return None


def check_behavioral(arch: Architecture, max_states: int = DEFAULT_STATE_CAP) -> Verdict:
    stuck = find_deadlock(arch, max_states)
    if stuck is not None:
        return Verdict.incompatible(ANALYSIS, "protocols", f"deadlock: {stuck}")
    return Verdict.compatible(ANALYSIS, "protocols")
