"""Reaction rules and their execution.

``apply`` keeps the ids of every agent node it does not touch and only
allocates fresh ids for reactum nodes and for extra copies of duplicated
parameters, so node identity survives across a run.  Scheduling is fully
deterministic: the first priority class with any match wins, and inside it
the earliest-defined rule at its lowest canonical occurrence fires.
"""
from __future__ import annotations

import operator
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .bigraph import Bigraph, Edge, LinkTarget, Node, Root, Site, canonical_dumps, validate
from .errors import BigraphError, PatternNotSolid, RedexNotSolid, StaleOccurrence
from .matching import Occurrence, check_solid, find_occurrences
from .oracle import occurrence_is_valid


@dataclass(frozen=True)
class Selector:
    """Picks a payload value out of a matched occurrence.

    ``labels(C)`` gives the sorted labels of agent nodes matched by redex
    nodes of control ``C``; ``count(C)`` their number; ``scope`` and ``rule``
    the spatial name of the firing agent's scope and the rule name.
    """
    kind: str
    arg: Optional[str] = None

    RESULT_TYPES = {"labels": "name-list", "count": "integer", "scope": "string", "rule": "string"}

    @property
    def result_type(self) -> str:
        return self.RESULT_TYPES[self.kind]

    def __str__(self):
        return f"{self.kind}({self.arg})" if self.arg else self.kind


@dataclass(frozen=True)
class EscalationClause:
    schema_id: str
    fields: Tuple[Tuple[str, Selector], ...]

    def evaluate(self, agent: Bigraph, rule: "ReactionRule", occ: Occurrence, scope: str = "") -> dict:
        out = {}
        for name, sel in self.fields:
            if sel.kind == "labels":
                out[name] = sorted(
                    agent.nodes[a].label or str(a)
                    for v, a in occ.node_map.items()
                    if rule.redex.nodes[v].control == sel.arg
                )
            elif sel.kind == "count":
                out[name] = sum(1 for v in occ.node_map if rule.redex.nodes[v].control == sel.arg)
            elif sel.kind == "scope":
                out[name] = scope
            elif sel.kind == "rule":
                out[name] = rule.name
        return out


@dataclass(frozen=True)
class ReactionRule:
    name: str
    redex: Bigraph
    reactum: Bigraph
    eta: Tuple[int, ...] = None
    escalation: Optional[EscalationClause] = None
    site_names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.eta is None:
            object.__setattr__(self, "eta", tuple(range(self.reactum.interface.sites)))
        if not self.site_names:
            object.__setattr__(self, "site_names",
                               tuple(f"s{i}" for i in range(self.redex.interface.sites)))

    def check(self) -> None:
        check_solid(self.redex)
        if len(self.eta) != self.reactum.interface.sites:
            raise BigraphError(f"rule {self.name}: instantiation map must cover every reactum site")
        if any(not 0 <= s < self.redex.interface.sites for s in self.eta):
            raise BigraphError(f"rule {self.name}: instantiation map points at a missing redex site")
        if self.redex.interface.roots != self.reactum.interface.roots:
            raise BigraphError(f"rule {self.name}: redex and reactum have different region counts")
        for side in (self.redex, self.reactum):
            problems = validate(side)
            if problems:
                raise BigraphError(f"rule {self.name}: {problems[0]}")


@dataclass(frozen=True)
class BrsSpec:
    init: Bigraph
    classes: Tuple[Tuple[ReactionRule, ...], ...]

    @property
    def rules(self) -> List[ReactionRule]:
        return [r for cls in self.classes for r in cls]


@dataclass(frozen=True)
class StepRecord:
    index: int
    rule: str
    occurrence: Tuple[int, ...]
    hash: str
    escalation: Optional[dict] = None

    def to_json(self) -> dict:
        return {"index": self.index, "rule": self.rule,
                "occurrence": list(self.occurrence), "hash": self.hash}


@dataclass
class Trace:
    steps: List[StepRecord] = field(default_factory=list)
    final: Optional[Bigraph] = None
    reason: str = "quiescent"

    @property
    def final_hash(self) -> str:
        return self.final.canonical_hash()

    def to_jsonl(self) -> str:
        lines = [canonical_dumps(s.to_json()) for s in self.steps]
        lines.append(canonical_dumps({"final_hash": self.final_hash, "reason": self.reason}))
        return "\n".join(lines) + "\n"


# -- rewriting --------------------------------------------------------------

def apply(agent: Bigraph, rule: ReactionRule, occ: Occurrence) -> Bigraph:
    if not occurrence_is_valid(agent, rule.redex, occ):
        raise StaleOccurrence(f"occurrence {occ.key()} of {rule.name} does not match the agent")
    redex, reactum = rule.redex, rule.reactum

    params = {s: [n for root in roots for n in agent.descendants(root)]
              for s, roots in occ.site_fill.items()}
    kept_sites = set(rule.eta)
    doomed = set(occ.node_map.values())
    for s, nodes in params.items():
        if s not in kept_sites:
            doomed.update(nodes)

    nodes: Dict[int, Node] = {n: v for n, v in agent.nodes.items() if n not in doomed}
    parent = {k: v for k, v in agent.parent.items() if k not in doomed}
    edges = set(agent.edges)
    for e in redex.edges:
        target = occ.link_map.get(Edge(e))
        if target is not None:
            edges.discard(target.id)

    next_node = agent.fresh_node_id()
    next_edge = agent.fresh_edge_id()

    def fresh_edge() -> Edge:
        nonlocal next_edge
        e = Edge(next_edge)
        edges.add(next_edge)
        next_edge += 1
        return e

    reactum_edges = {e: fresh_edge() for e in sorted(reactum.edges)}
    idle_names: Dict[str, Edge] = {}

    def bind(t: LinkTarget) -> LinkTarget:
        if isinstance(t, Edge):
            return reactum_edges[t.id]
        target = occ.link_map.get(t)
        if target is None:
            if t.name not in idle_names:
                idle_names[t.name] = fresh_edge()
            target = idle_names[t.name]
        return target

    labels = _carried_labels(agent, rule, occ)
    rmap: Dict[int, int] = {}
    for v in sorted(reactum.nodes):
        rmap[v] = next_node
        next_node += 1

    def host(p) -> Union[int, Root]:
        return occ.region_parents[p.index] if isinstance(p, Root) else rmap[p]

    for v in sorted(reactum.nodes):
        rv = reactum.nodes[v]
        label = rv.label if rv.label is not None else labels.get(v)
        nodes[rmap[v]] = Node(rmap[v], rv.control, tuple(bind(t) for t in rv.ports), label)
        parent[rmap[v]] = host(reactum.parent[v])

    planted = set()
    for i, s in enumerate(rule.eta):
        where = host(reactum.parent[Site(i)])
        roots = occ.site_fill.get(s, ())
        if s not in planted:
            planted.add(s)
            for r in roots:
                parent[r] = where
            continue
        copy_ids = {}
        for n in params[s]:
            copy_ids[n] = next_node
            next_node += 1
        for n in params[s]:
            old = agent.nodes[n]
            nodes[copy_ids[n]] = Node(copy_ids[n], old.control, old.ports, old.label)
            p = agent.parent[n]
            parent[copy_ids[n]] = where if n in roots else copy_ids[p]

    return Bigraph(agent.signature, nodes, parent, agent.interface, frozenset(edges),
                   dict(agent.inner_links))


def _carried_labels(agent: Bigraph, rule: ReactionRule, occ: Occurrence) -> Dict[int, str]:
    """Labels handed from matched agent nodes to reactum nodes.

    The k-th redex node of a control passes its agent label to the k-th
    reactum node of the same control (both in id order).
    """
    by_control = defaultdict(list)
    for v in sorted(rule.redex.nodes):
        by_control[rule.redex.nodes[v].control].append(agent.nodes[occ.node_map[v]].label)
    seen = defaultdict(int)
    out = {}
    for v in sorted(rule.reactum.nodes):
        c = rule.reactum.nodes[v].control
        k = seen[c]
        seen[c] += 1
        if k < len(by_control[c]) and by_control[c][k] is not None:
            out[v] = by_control[c][k]
    return out


def first_match(state: Bigraph, spec: BrsSpec) -> Optional[Tuple[ReactionRule, Occurrence]]:
    for cls in spec.classes:
        for rule in cls:
            occs = find_occurrences(state, rule.redex)
            if occs:
                return rule, occs[0]
    return None


def step(state: Bigraph, spec: BrsSpec, index: int = 0,
         scope: str = "") -> Optional[Tuple[Bigraph, StepRecord]]:
    found = first_match(state, spec)
    if found is None:
        return None
    rule, occ = found
    escalation = rule.escalation.evaluate(state, rule, occ, scope) if rule.escalation else None
    new = apply(state, rule, occ)
    return new, StepRecord(index, rule.name, occ.key(), new.canonical_hash(), escalation)


def run(spec: BrsSpec, max_steps: int, state: Bigraph = None) -> Trace:
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    state = spec.init if state is None else state
    trace = Trace()
    for i in range(max_steps):
        out = step(state, spec, i)
        if out is None:
            break
        state, record = out
        trace.steps.append(record)
    else:
        if first_match(state, spec) is not None:
            trace.reason = "max_steps"
    trace.final = state
    return trace


# -- predicates -------------------------------------------------------------

@dataclass(frozen=True)
class Occurs:
    pattern: Bigraph


@dataclass(frozen=True)
class Count:
    pattern: Bigraph
    op: str
    k: int


@dataclass(frozen=True)
class NameLinked:
    """Some node labelled ``x`` and some node labelled ``y`` share a link."""
    x: str
    y: str


Predicate = Union[Occurs, Count, NameLinked]

_OPS: Dict[str, Callable[[int, int], bool]] = {
    "<": operator.lt, "<=": operator.le, "==": operator.eq,
    "!=": operator.ne, ">=": operator.ge, ">": operator.gt,
}


def _count(state: Bigraph, pattern: Bigraph) -> int:
    try:
        check_solid(pattern)
    except RedexNotSolid as exc:
        raise PatternNotSolid(exc.reason) from None
    return len(find_occurrences(state, pattern))


def check_predicate(state: Bigraph, pred: Predicate) -> bool:
    if isinstance(pred, Occurs):
        return _count(state, pred.pattern) > 0
    if isinstance(pred, Count):
        return _OPS[pred.op](_count(state, pred.pattern), pred.k)
    if isinstance(pred, NameLinked):
        links_of = defaultdict(set)
        for node in state.nodes.values():
            if node.label is not None:
                links_of[node.label].update(node.ports)
        return bool(links_of[pred.x] & links_of[pred.y])
    raise TypeError(f"unknown predicate {pred!r}")


def rules_by_name(rules: Sequence[ReactionRule]) -> Dict[str, ReactionRule]:
    return {r.name: r for r in rules}


__all__ = [
    "Selector", "EscalationClause", "ReactionRule", "BrsSpec", "StepRecord", "Trace",
    "apply", "step", "run", "first_match", "check_predicate", "Occurs", "Count",
    "NameLinked", "Predicate", "rules_by_name",
]
