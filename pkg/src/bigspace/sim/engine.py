"""Synchronous rounds over a shared bigraph.

Each round delivers the messages queued in the previous round, applies the
sensor events scheduled for it, and then lets every agent, in ascending
(tier, id) order, run its rules inside its own scope, raise escalations and
record them in the audit chain.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fnmatch import fnmatchcase
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ..bigraph import Bigraph, canonical_dumps
from ..errors import BigraphError
from ..matching import find_occurrences
from ..rewriting import BrsSpec, ReactionRule, StepRecord, apply, first_match, step
from ..spatial import (
    SpatialName,
    extract_scope,
    insert_node,
    reattach,
    remove_subtree,
    resolve,
    scope_nodes,
)
from .scenario import AgentSpec, Decision, Scenario, SensorEvent, read_bundle
from .security import (
    AuditRecord,
    CapabilityToken,
    EscalationMessage,
    Tier,
    append_audit,
    audit_jsonl,
    mint_token,
    validate_escalation,
)

Event = dict


@dataclass(frozen=True)
class InboxItem:
    """Something an agent observed this round: a sensor event or a delivered message."""
    descriptor: str
    source: str                       # sensor | message
    controls: Tuple[str, ...] = ()    # controls the sensor event touched


@dataclass(frozen=True)
class EscalationIntent:
    kind: str                         # rule | unknown-state | uncertainty | scope-violation
    schema_id: str
    payload: dict

    @property
    def to_central(self) -> bool:
        return self.kind == "scope-violation"


@dataclass(frozen=True)
class SimState:
    scenario: Scenario
    world: Bigraph
    round: int = 0
    queue: Tuple[EscalationMessage, ...] = ()
    audit: Tuple[AuditRecord, ...] = ()
    tokens: Dict[str, CapabilityToken] = field(default_factory=dict)

    def with_message(self, msg: EscalationMessage) -> "SimState":
        """Queue an extra message for delivery next round (fault injection)."""
        return replace(self, queue=self.queue + (msg,))


@dataclass(frozen=True)
class RoundRecord:
    round: int
    events: Tuple[Event, ...]
    messages: Tuple[EscalationMessage, ...]
    hash: str

    def to_json(self) -> dict:
        return {"round": self.round, "events": list(self.events),
                "messages": [m.to_json() for m in self.messages], "hash": self.hash}


@dataclass
class SimTrace:
    initial_hash: str
    seed: int
    agents: Tuple[str, ...]
    rounds: List[RoundRecord] = field(default_factory=list)
    audit: Tuple[AuditRecord, ...] = ()
    final: Optional[Bigraph] = None

    @property
    def final_hash(self) -> str:
        return self.final.canonical_hash() if self.final is not None else self.initial_hash

    @property
    def messages(self) -> List[EscalationMessage]:
        return [m for r in self.rounds for m in r.messages]

    @property
    def hashes(self) -> List[str]:
        return [r.hash for r in self.rounds]

    def events(self, kind: Optional[str] = None) -> List[Event]:
        return [e for r in self.rounds for e in r.events if kind is None or e["kind"] == kind]

    def to_jsonl(self) -> str:
        lines = [canonical_dumps({"initial_hash": self.initial_hash, "seed": self.seed,
                                  "agents": list(self.agents)})]
        lines += [canonical_dumps(r.to_json()) for r in self.rounds]
        lines.append(canonical_dumps({"final_hash": self.final_hash, "rounds": len(self.rounds),
                                      "messages": len(self.messages)}))
        return "\n".join(lines) + "\n"

    def audit_jsonl(self) -> str:
        return audit_jsonl(self.audit)

    def write(self, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace, audit = out / "trace.jsonl", out / "audit.jsonl"
        trace.write_text(self.to_jsonl())
        audit.write_text(self.audit_jsonl())
        return trace, audit


# -- setup ------------------------------------------------------------------------

def initial_state(scenario: Scenario) -> SimState:
    tokens = {}
    for a in scenario.agents:
        expiry = a.token_expiry if a.token_expiry is not None else scenario.max_rounds + 1
        schemas = set(a.manifest.schemas) | {"unknown-state-v1", "uncertainty-v1", "scope-violation-v1"}
        tokens[a.id] = mint_token(a.id, a.manifest.scope or "", sorted(schemas), 0, expiry,
                                  a.token_secret or scenario.secret)
    return SimState(scenario, scenario.world, 0, (), (), tokens)


def load_scenario(path: Union[str, Path]) -> SimState:
    return initial_state(read_bundle(path))


# -- helpers ----------------------------------------------------------------------

def _depth(scope: Optional[str]) -> int:
    return 0 if scope is None else len(SpatialName.parse(scope).segments)


def _contains(outer: Optional[str], inner: Optional[str]) -> bool:
    if outer is None:
        return True
    if inner is None:
        return False
    return SpatialName.parse(inner).within(SpatialName.parse(outer))


def escalation_target(agents: Sequence[AgentSpec], agent: AgentSpec, kind: str) -> Optional[AgentSpec]:
    """Scope violations go to Central; everything else to the nearest enclosing higher tier."""
    by_id = {a.id: a for a in agents}
    if kind == "scope-violation":
        central = sorted((a for a in agents if a.tier == Tier.CENTRAL), key=lambda a: a.id)
        target = central[0] if central else None
    elif agent.parent is not None:
        target = by_id.get(agent.parent)
    else:
        above = [a for a in agents if a.tier > agent.tier and _contains(a.scope, agent.scope)]
        above.sort(key=lambda a: (-_depth(a.scope), a.tier, a.id))
        target = above[0] if above else None
    if target is None or target.tier <= agent.tier:
        return None
    return target


def event_handler(agents: Sequence[AgentSpec], scope: Optional[str]) -> Optional[AgentSpec]:
    """The agent with the most specific scope containing ``scope``, lowest tier first."""
    fits = [a for a in agents if _contains(a.scope, scope)]
    fits.sort(key=lambda a: (-_depth(a.scope), a.tier, a.id))
    return fits[0] if fits else None


def agent_classes(scenario: Scenario, agent: AgentSpec) -> Tuple[Tuple[ReactionRule, ...], ...]:
    """The agent's rules grouped by the program's priority classes."""
    mine = list(agent.rules)
    rules = scenario.program.rules
    classes = []
    placed = set()
    if scenario.program.brs is not None:
        order = list(rules)
        for cls in scenario.program.brs.classes:
            picked = sorted((r for r in cls if r in mine), key=order.index)
            if picked:
                classes.append(tuple(rules[r] for r in picked))
                placed.update(picked)
    rest = [r for r in mine if r not in placed]
    if rest:
        classes.append(tuple(rules[r] for r in rest))
    return tuple(classes)


def _rule_controls(scenario: Scenario, agent: AgentSpec) -> set:
    out = set()
    for name in agent.rules:
        rule = scenario.program.rules[name]
        for side in (rule.redex, rule.reactum):
            out.update(n.control for n in side.nodes.values())
    return out


def _first_decision(agent: AgentSpec, descriptor: str) -> Optional[Decision]:
    for d in agent.decisions:
        if fnmatchcase(descriptor, d.pattern):
            return d
    return None


def _violates_manifest(agent: AgentSpec, decision: Decision) -> bool:
    if decision.action not in agent.manifest.privileges:
        return True
    return any(not agent.manifest.covers(ref) for ref in decision.refs)


def recognizes(scenario: Scenario, agent: AgentSpec, item: InboxItem) -> bool:
    """Whether the agent has a reaction for an observed sensor event."""
    if _first_decision(agent, item.descriptor) is not None:
        return True
    kind, _, what = item.descriptor.partition(":")
    if kind == "rule":
        return what in agent.rules
    return bool(set(item.controls) & _rule_controls(scenario, agent))


# -- triggers ---------------------------------------------------------------------

def evaluate_triggers(scenario: Scenario, agent: AgentSpec, inbox: Sequence[InboxItem],
                      fired: Sequence[StepRecord] = ()) -> List[EscalationIntent]:
    """Escalation intents for one agent in one round, in a fixed order:
    rule-driven, unknown state, then scripted decisions."""
    intents = []
    for rec in fired:
        rule = scenario.program.rules[rec.rule]
        if rec.escalation is not None:
            intents.append(EscalationIntent("rule", rule.escalation.schema_id, dict(rec.escalation)))
    for item in inbox:
        if item.source == "sensor" and not recognizes(scenario, agent, item):
            intents.append(EscalationIntent("unknown-state", "unknown-state-v1",
                                            {"descriptor": item.descriptor}))
    for item in inbox:
        d = _first_decision(agent, item.descriptor)
        if d is None:
            continue
        if _violates_manifest(agent, d):
            intents.append(EscalationIntent("scope-violation", "scope-violation-v1",
                                            {"action": d.action, "refs": sorted(d.refs)}))
        elif d.confidence < agent.threshold:
            intents.append(EscalationIntent("uncertainty", "uncertainty-v1",
                                            {"action": d.action,
                                             "confidence_pct": int(round(d.confidence * 100))}))
    return intents


def accepted_decisions(agent: AgentSpec, inbox: Sequence[InboxItem]) -> List[Tuple[InboxItem, Decision]]:
    """Decisions the agent carries out itself: within its manifest and confident enough."""
    out = []
    for item in inbox:
        d = _first_decision(agent, item.descriptor)
        if d is not None and not _violates_manifest(agent, d) and d.confidence >= agent.threshold:
            out.append((item, d))
    return out


# -- phases -----------------------------------------------------------------------

def _apply_once(b: Bigraph, rule: ReactionRule) -> Optional[Bigraph]:
    occs = find_occurrences(b, rule.redex)
    return apply(b, rule, occs[0]) if occs else None


def _in_scope(world: Bigraph, scope: Optional[str], fn):
    """Run ``fn`` on the scoped view (or the whole bigraph) and put the result back."""
    if scope is None:
        return fn(world)
    sv = extract_scope(world, resolve(world, scope))
    new = fn(sv.view)
    if new is None:
        return None
    return reattach(world, replace(sv, view=new))


def _apply_sensor(world: Bigraph, scenario: Scenario, ev: SensorEvent) -> Tuple[Bigraph, InboxItem]:
    def under(rel: Optional[str]) -> Optional[int]:
        if rel is None:
            return resolve(world, ev.scope) if ev.scope else None
        return resolve(world, f"{rel}.{ev.scope}" if ev.scope else rel)

    if ev.kind == "insert":
        place = under(ev.into)
        touched = (ev.control,) + ((world.nodes[place].control,) if place is not None else ())
        world, _ = insert_node(world, place, ev.control, ev.label)
        return world, InboxItem(f"insert:{ev.control}", "sensor", touched)
    if ev.kind == "remove":
        node = under(ev.target)
        ctrl = world.nodes[node].control
        up = world.parent[node]
        touched = (ctrl,) + ((world.nodes[up].control,) if isinstance(up, int) else ())
        return remove_subtree(world, node), InboxItem(f"remove:{ctrl}", "sensor", touched)
    if ev.kind == "rule":
        rule = scenario.program.rules[ev.rule]
        new = _in_scope(world, ev.scope, lambda b: _apply_once(b, rule))
        return (new if new is not None else world), InboxItem(f"rule:{ev.rule}", "sensor")
    return world, InboxItem(f"signal:{ev.name}", "sensor")


def _check_awareness(world: Bigraph, agent: AgentSpec, local: Bigraph) -> None:
    if agent.tier != Tier.DELEGATED or agent.manifest.scope is None:
        return
    allowed = set(scope_nodes(world, resolve(world, agent.manifest.scope)))
    stray = set(local.nodes) - allowed
    if stray:
        raise RuntimeError(f"agent {agent.id} sees nodes {sorted(stray)} outside its manifest scope")


def run_round(state: SimState) -> Tuple[SimState, List[Event]]:
    sc = state.scenario
    r = state.round + 1
    world = state.world
    events: List[Event] = []
    inbox: Dict[str, List[InboxItem]] = {a.id: [] for a in sc.agents}
    tiers = {a.id: a.tier for a in sc.agents}

    # 1. delivery
    for msg in state.queue:
        why = validate_escalation(msg, sc.contracts, sc.secret, r, tiers)
        base = {"from": msg.sender, "to": msg.recipient, "schema_id": msg.schema_id}
        if why is not None:
            events.append(dict(base, kind="message-rejected", reason=why.reason, detail=why.detail))
            continue
        events.append(dict(base, kind="message-delivered", payload=dict(msg.payload)))
        inbox[msg.recipient].append(InboxItem(f"message:{msg.schema_id}", "message"))

    # 2. sensor events
    for ev in sc.events:
        if ev.round != r:
            continue
        handler = event_handler(sc.agents, ev.scope)
        try:
            world, item = _apply_sensor(world, sc, ev)
        except BigraphError as exc:
            events.append({"kind": "sensor-failed", "event": ev.to_json(), "error": str(exc)})
            continue
        events.append({"kind": "sensor", "event": ev.to_json(), "descriptor": item.descriptor,
                       "handler": handler.id if handler else None})
        if handler is not None:
            inbox[handler.id].append(item)

    # 3. agents
    sent: List[EscalationMessage] = []
    audit = list(state.audit)
    for agent in sorted(sc.agents, key=lambda a: a.order):
        try:
            place = resolve(world, agent.scope) if agent.scope is not None else None
            sv = extract_scope(world, place) if place is not None else None
        except BigraphError as exc:
            events.append({"kind": "scope-missing", "agent": agent.id, "error": str(exc)})
            continue
        local = sv.view if sv is not None else world
        _check_awareness(world, agent, local)

        fired: List[StepRecord] = []
        classes = agent_classes(sc, agent)
        if classes:
            spec = BrsSpec(local, classes)
            for i in range(sc.local_step_limit):
                out = step(local, spec, i, agent.scope or "")
                if out is None:
                    break
                local, rec = out
                fired.append(rec)
                events.append({"kind": "rule-fired", "agent": agent.id, "rule": rec.rule,
                               "occurrence": list(rec.occurrence)})
            else:
                if first_match(local, spec) is not None:
                    events.append({"kind": "local-step-limit", "agent": agent.id})

        items = inbox[agent.id]
        intents = evaluate_triggers(sc, agent, items, fired)
        for item, d in accepted_decisions(agent, items):
            events.append({"kind": "decision", "agent": agent.id, "on": item.descriptor,
                           "action": d.action})
            if d.action.startswith("rule:"):
                name = d.action[len("rule:"):]
                rule = sc.program.rules.get(name)
                new = _apply_once(local, rule) if rule is not None else None
                if new is not None:
                    local = new
                    events.append({"kind": "rule-fired", "agent": agent.id, "rule": name,
                                   "occurrence": []})

        if local is not (sv.view if sv is not None else world):
            world = reattach(world, replace(sv, view=local)) if sv is not None else local

        for intent in intents:
            target = escalation_target(sc.agents, agent, intent.kind)
            if target is None:
                events.append({"kind": "escalation-undeliverable", "agent": agent.id,
                               "trigger": intent.kind, "schema_id": intent.schema_id})
                continue
            msg = EscalationMessage.build(agent.id, target.id, r, intent.schema_id, intent.payload,
                                          state.tokens[agent.id], intent.kind)
            sent.append(msg)
            audit = append_audit(audit, msg)
            events.append({"kind": "escalation-sent", "from": agent.id, "to": target.id,
                           "trigger": intent.kind, "schema_id": intent.schema_id,
                           "payload_hash": msg.payload_hash})

    new_state = replace(state, world=world, round=r, queue=tuple(sent), audit=tuple(audit))
    return new_state, events


def run_sim(scenario: Union[Scenario, SimState], rounds: Optional[int] = None) -> SimTrace:
    state = scenario if isinstance(scenario, SimState) else initial_state(scenario)
    sc = state.scenario
    rounds = sc.max_rounds if rounds is None else rounds
    trace = SimTrace(state.world.canonical_hash(), sc.seed, tuple(a.id for a in sc.agents))
    for _ in range(rounds):
        queued = len(state.audit)
        state, events = run_round(state)
        trace.rounds.append(RoundRecord(state.round, tuple(events), state.queue,
                                        state.world.canonical_hash()))
        assert len(state.audit) == queued + len(state.queue)
    trace.audit = state.audit
    trace.final = state.world
    return trace


__all__ = [
    "InboxItem", "EscalationIntent", "SimState", "RoundRecord", "SimTrace", "Event",
    "initial_state", "load_scenario", "run_round", "run_sim", "evaluate_triggers",
    "accepted_decisions", "escalation_target", "event_handler", "agent_classes", "recognizes",
]
