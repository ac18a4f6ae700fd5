"""Scenario bundles: model, scan, agents, schemas, events and secret.

A bundle is a directory holding ``model.big``, ``scan.json``,
``agents.json``, ``schemas.json``, ``events.json`` and ``secret.hex``.
Everything is cross-checked at load time so that a running simulation only
ever fails through recorded events.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from ..bigraph import Bigraph
from ..dsl import Program, load_program
from ..errors import BigraphError, StaticSchemaViolation, ValidationError
from ..spatial import ScanDocument, SpatialName, ingest_scan, resolve
from .security import BUILTIN_CONTRACTS, SchemaContract, Tier

BUNDLE_FILES = ("model.big", "scan.json", "agents.json", "schemas.json", "events.json", "secret.hex")
EVENT_KINDS = ("insert", "remove", "rule", "signal")


@dataclass(frozen=True)
class Decision:
    """A scripted decision standing in for a reasoning model."""
    pattern: str
    action: str
    confidence: float
    refs: Tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"on": self.pattern, "action": self.action,
                "confidence": self.confidence, "refs": list(self.refs)}


@dataclass(frozen=True)
class PolicyManifest:
    agent: str
    scope: Optional[str]
    schemas: Tuple[str, ...]
    privileges: FrozenSet[str]

    def covers(self, name: str) -> bool:
        if self.scope is None:
            return True
        return SpatialName.parse(name).within(SpatialName.parse(self.scope))


@dataclass(frozen=True)
class AgentSpec:
    id: str
    tier: Tier
    scope: Optional[str]
    manifest: PolicyManifest
    rules: Tuple[str, ...] = ()
    decisions: Tuple[Decision, ...] = ()
    threshold: float = 0.5
    parent: Optional[str] = None
    token_expiry: Optional[int] = None
    token_secret: Optional[bytes] = None

    @property
    def order(self) -> Tuple[int, str]:
        return (int(self.tier), self.id)


@dataclass(frozen=True)
class SensorEvent:
    round: int
    scope: Optional[str]
    kind: str
    control: Optional[str] = None
    label: Optional[str] = None
    into: Optional[str] = None
    target: Optional[str] = None
    rule: Optional[str] = None
    name: Optional[str] = None

    def to_json(self) -> dict:
        d = {"round": self.round, "scope": self.scope, "kind": self.kind}
        for key in ("control", "label", "into", "target", "rule", "name"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d


@dataclass(frozen=True)
class Scenario:
    program: Program
    world: Bigraph
    agents: Tuple[AgentSpec, ...]
    contracts: Dict[str, SchemaContract]
    secret: bytes
    events: Tuple[SensorEvent, ...]
    max_rounds: int
    seed: int = 0
    local_step_limit: int = 32

    def agent(self, agent_id: str) -> AgentSpec:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def without_agent(self, agent_id: str) -> "Scenario":
        return replace(self, agents=tuple(a for a in self.agents if a.id != agent_id))


# -- parsing ----------------------------------------------------------------------

def _get(d: dict, key: str, where: str, kind=None, default=...):
    if key not in d:
        if default is ...:
            raise ValidationError(where, f"missing field {key!r}")
        return default
    value = d[key]
    if kind is not None and not isinstance(value, kind):
        raise ValidationError(where, f"field {key!r} has the wrong type")
    return value


def _parse_agent(d: dict, where: str) -> AgentSpec:
    if not isinstance(d, dict):
        raise ValidationError(where, "agent entry must be an object")
    agent_id = _get(d, "id", where, str)
    try:
        tier = Tier.parse(_get(d, "tier", where, str))
    except KeyError:
        raise ValidationError(where, f"unknown tier {d['tier']!r}") from None
    scope = _get(d, "scope", where, (str, type(None)), None)
    m = _get(d, "manifest", where, dict, {})
    manifest = PolicyManifest(
        agent_id,
        _get(m, "scope", f"{where}.manifest", (str, type(None)), scope),
        tuple(_get(m, "schemas", f"{where}.manifest", list, [])),
        frozenset(_get(m, "privileges", f"{where}.manifest", list, [])),
    )
    decisions = []
    for i, x in enumerate(_get(d, "decisions", where, list, [])):
        w = f"{where}.decisions[{i}]"
        conf = _get(x, "confidence", w, (int, float))
        if not 0 <= conf <= 1:
            raise ValidationError(w, "confidence must lie in [0, 1]")
        decisions.append(Decision(_get(x, "on", w, str), _get(x, "action", w, str), float(conf),
                                  tuple(_get(x, "refs", w, list, []))))
    threshold = _get(d, "threshold", where, (int, float), 0.5)
    if not 0 <= threshold <= 1:
        raise ValidationError(where, "threshold must lie in [0, 1]")
    secret = _get(d, "token_secret", where, str, None)
    return AgentSpec(
        agent_id, tier, scope, manifest,
        tuple(_get(d, "rules", where, list, [])),
        tuple(decisions), float(threshold),
        _get(d, "escalate_to", where, str, None),
        _get(d, "token_expiry", where, int, None),
        bytes.fromhex(secret) if secret is not None else None,
    )


def _parse_event(d: dict, where: str) -> SensorEvent:
    rnd = _get(d, "round", where, int)
    if rnd < 1:
        raise ValidationError(where, "events start at round 1")
    kind = _get(d, "kind", where, str)
    if kind not in EVENT_KINDS:
        raise ValidationError(where, f"unknown event kind {kind!r}")
    required = {"insert": ("control",), "remove": ("target",), "rule": ("rule",), "signal": ("name",)}
    for key in required[kind]:
        _get(d, key, where, str)
    return SensorEvent(rnd, _get(d, "scope", where, (str, type(None)), None), kind,
                       d.get("control"), d.get("label"), d.get("into"), d.get("target"),
                       d.get("rule"), d.get("name"))


def parse_contracts(doc: Union[dict, list]) -> Dict[str, SchemaContract]:
    items = doc.get("schemas", []) if isinstance(doc, dict) else doc
    contracts = dict(BUILTIN_CONTRACTS)
    for i, item in enumerate(items):
        try:
            c = SchemaContract.from_json(item)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"schemas.json: schemas[{i}]", str(exc)) from None
        if c.schema_id in contracts:
            raise ValidationError(f"schemas.json: schemas[{i}]", f"schema {c.schema_id} defined twice")
        contracts[c.schema_id] = c
    return contracts


# -- cross validation ---------------------------------------------------------------

def check_escalation_schemas(program: Program, contracts: Dict[str, SchemaContract]) -> None:
    """Every escalation clause must emit exactly the fields of its schema, with matching types."""
    for rule in program.rules.values():
        clause = rule.escalation
        if clause is None:
            continue
        contract = contracts.get(clause.schema_id)
        if contract is None:
            raise ValidationError(f"model.big: rule {rule.name}", f"unknown schema {clause.schema_id}")
        emitted = dict(clause.fields)
        for fname, sel in clause.fields:
            declared = contract.type_of(fname)
            if declared is None:
                raise StaticSchemaViolation(rule.name, fname)
            if declared != sel.result_type:
                raise StaticSchemaViolation(rule.name, fname,
                                            f"yields {sel.result_type}, schema wants {declared}")
        for fname in contract.field_names:
            if fname not in emitted:
                raise StaticSchemaViolation(rule.name, fname, "is required by the schema but not emitted")


def _resolves(world: Bigraph, name: Optional[str], where: str) -> None:
    if name is None:
        return
    try:
        resolve(world, name)
    except BigraphError as exc:
        raise ValidationError(where, str(exc)) from None


def _check_agents(agents: List[AgentSpec], program: Program, world: Bigraph,
                  contracts: Dict[str, SchemaContract]) -> None:
    if not agents:
        raise ValidationError("agents.json", "no agents")
    by_id = {}
    for i, a in enumerate(agents):
        where = f"agents.json: agents[{i}]"
        if a.id in by_id:
            raise ValidationError(where, f"agent id {a.id} used twice")
        by_id[a.id] = a
        if a.tier != Tier.CENTRAL and a.scope is None:
            raise ValidationError(where, f"{a.tier} agent needs a scope")
        _resolves(world, a.scope, f"{where}.scope")
        _resolves(world, a.manifest.scope, f"{where}.manifest.scope")
        if a.scope is not None and a.manifest.scope is not None and not a.manifest.covers(a.scope):
            raise ValidationError(where, f"scope {a.scope} lies outside manifest scope {a.manifest.scope}")
        if a.tier == Tier.LEAF and a.scope is not None:
            node = resolve(world, a.scope)
            if world.control_of(node).atomic:
                raise ValidationError(where, "leaf scope must be a place, not an atomic device")
        for r in a.rules:
            if r not in program.rules:
                raise ValidationError(f"{where}.rules", f"unknown rule {r}")
        for s in a.manifest.schemas:
            if s not in contracts:
                raise ValidationError(f"{where}.manifest.schemas", f"unknown schema {s}")
    for i, a in enumerate(agents):
        if a.parent is None:
            continue
        where = f"agents.json: agents[{i}].escalate_to"
        p = by_id.get(a.parent)
        if p is None:
            raise ValidationError(where, f"unknown agent {a.parent}")
        if p.tier <= a.tier:
            raise ValidationError(where, f"{a.parent} is not in a higher tier")
        if p.scope is not None and (a.scope is None or
                                    not SpatialName.parse(a.scope).within(SpatialName.parse(p.scope))):
            raise ValidationError(where, f"scope of {a.id} does not nest inside {a.parent}")


def _check_events(events: List[SensorEvent], program: Program, world: Bigraph) -> None:
    for i, e in enumerate(events):
        where = f"events.json: events[{i}]"
        _resolves(world, e.scope, f"{where}.scope")
        if e.kind == "insert" and e.control not in program.signature:
            raise ValidationError(where, f"undeclared control {e.control}")
        if e.kind == "rule" and e.rule not in program.rules:
            raise ValidationError(where, f"unknown rule {e.rule}")


# -- loading ----------------------------------------------------------------------

def build_scenario(model: str, scan: Union[dict, list], agents: dict, schemas: Union[dict, list],
                   events: Union[dict, list], secret: bytes) -> Scenario:
    program = load_program(model)
    world = ingest_scan(ScanDocument.from_json(scan), program.signature)
    contracts = parse_contracts(schemas)
    check_escalation_schemas(program, contracts)

    if not isinstance(agents, dict):
        raise ValidationError("agents.json", "expected an object with an 'agents' list")
    specs = [_parse_agent(d, f"agents.json: agents[{i}]")
             for i, d in enumerate(_get(agents, "agents", "agents.json", list))]
    _check_agents(specs, program, world, contracts)
    max_rounds = _get(agents, "max_rounds", "agents.json", int, 10)
    if max_rounds < 0:
        raise ValidationError("agents.json", "max_rounds must be non-negative")

    items = events.get("events", []) if isinstance(events, dict) else events
    evs = [_parse_event(d, f"events.json: events[{i}]") for i, d in enumerate(items)]
    _check_events(evs, program, world)

    if not secret:
        raise ValidationError("secret.hex", "secret is empty")
    return Scenario(program, world, tuple(specs), contracts, secret, tuple(evs), max_rounds,
                    _get(agents, "seed", "agents.json", int, 0),
                    _get(agents, "local_step_limit", "agents.json", int, 32))


def read_bundle(path: Union[str, Path]) -> Scenario:
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"{root}: not a scenario directory")
    for name in BUNDLE_FILES:
        if not (root / name).is_file():
            raise FileNotFoundError(f"{root / name}: missing")

    def load_json(name):
        try:
            return json.loads((root / name).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(name, f"line {exc.lineno}: {exc.msg}") from None

    try:
        secret = bytes.fromhex((root / "secret.hex").read_text().strip())
    except ValueError:
        raise ValidationError("secret.hex", "not hexadecimal") from None
    return build_scenario((root / "model.big").read_text(), load_json("scan.json"),
                          load_json("agents.json"), load_json("schemas.json"),
                          load_json("events.json"), secret)


__all__ = [
    "Decision", "PolicyManifest", "AgentSpec", "SensorEvent", "Scenario", "BUNDLE_FILES",
    "build_scenario", "read_bundle", "parse_contracts", "check_escalation_schemas",
]
