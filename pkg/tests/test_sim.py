import json
from dataclasses import replace

import pytest

from bigspace.errors import StaticSchemaViolation, ValidationError
from bigspace.sim import (
    EscalationMessage,
    InboxItem,
    SchemaContract,
    Tier,
    append_audit,
    evaluate_triggers,
    initial_state,
    load_scenario,
    mint_token,
    read_bundle,
    run_round,
    run_sim,
    validate_escalation,
    verify_chain,
)
from bigspace.sim.engine import escalation_target, event_handler
from bigspace.sim.security import BUILTIN_CONTRACTS, ZERO_HASH, AuditRecord, read_audit_jsonl

from conftest import SCENARIOS

SECRET = b"k" * 32
PRESENCE = SchemaContract.from_json({"id": "presence-v1",
                                     "fields": [{"name": "users", "type": "name-list"}]})
CONTRACTS = dict(BUILTIN_CONTRACTS, **{"presence-v1": PRESENCE})
TIERS = {"leaf": Tier.LEAF, "hub": Tier.DELEGATED, "central": Tier.CENTRAL}


def message(payload=None, sender="leaf", to="hub", schema="presence-v1", secret=SECRET,
            expiry=5, schemas=("presence-v1",)):
    token = mint_token(sender, "room-a.floor-1.building-1", schemas, 0, expiry, secret)
    if payload is None:
        payload = {"users": ["bob"]}
    return EscalationMessage.build(sender, to, 1, schema, payload, token)


def check(msg, round=1):
    return validate_escalation(msg, CONTRACTS, SECRET, round, TIERS)


def edit_json(path, fn):
    doc = json.loads(path.read_text())
    fn(doc)
    path.write_text(json.dumps(doc))


# -- contracts and tokens -------------------------------------------------------

def test_tier_order():
    assert Tier.LEAF < Tier.DELEGATED < Tier.CENTRAL
    assert Tier.parse("Delegated") is Tier.DELEGATED and str(Tier.CENTRAL) == "central"


def test_valid_message_passes():
    assert check(message()) is None


def test_extra_field_is_a_schema_mismatch():
    why = check(message({"users": ["bob"], "raw_audio": "..."}))
    assert (why.reason, why.detail) == ("SchemaMismatch", "raw_audio")


def test_wrong_types_are_schema_mismatches():
    assert check(message({"users": "bob"})).reason == "SchemaMismatch"
    assert check(message({"users": ["Bob Smith"]})).reason == "SchemaMismatch"
    assert check(message({})).reason == "SchemaMismatch"


def test_field_limits():
    c = CONTRACTS["uncertainty-v1"]
    assert c.mismatch({"action": "x" * 256, "confidence_pct": 40}) is None
    assert c.mismatch({"action": "x" * 257, "confidence_pct": 40}) == "action"
    assert c.mismatch({"action": "x", "confidence_pct": True}) == "confidence_pct"
    assert PRESENCE.mismatch({"users": ["a"] * 64}) is None
    assert PRESENCE.mismatch({"users": ["a"] * 65}) == "users"


def test_wrong_secret_is_a_bad_signature():
    assert check(message(secret=b"not the scenario secret")).reason == "BadSignature"


def test_borrowed_token_is_a_bad_signature():
    msg = message()
    assert check(replace(msg, sender="hub", recipient="central")).reason == "BadSignature"


def test_tampered_token_is_a_bad_signature():
    msg = message()
    wider = replace(msg.token, schemas=msg.token.schemas + ("uncertainty-v1",))
    assert check(replace(msg, token=wider)).reason == "BadSignature"


def test_expired_token():
    assert check(message(expiry=2), round=2) is None
    assert check(message(expiry=2), round=3).reason == "Expired"


def test_schema_not_on_token():
    msg = message({"descriptor": "signal:x"}, schema="unknown-state-v1")
    assert check(msg).reason == "SchemaNotPermitted"


def test_escalation_must_go_up():
    msg = message(sender="hub", to="leaf")
    assert check(msg).reason == "TierViolation"


def test_payload_hash_must_match():
    msg = message()
    assert check(replace(msg, payload_hash=ZERO_HASH)).reason == "HashMismatch"


def test_token_expiry_before_issue():
    with pytest.raises(ValueError):
        mint_token("leaf", "", (), 3, 2, SECRET)


def test_duplicate_contract_fields():
    with pytest.raises(ValueError):
        SchemaContract.from_json({"id": "x", "fields": [{"name": "a", "type": "string"},
                                                        {"name": "a", "type": "integer"}]})


# -- audit chain ----------------------------------------------------------------

def chain(n):
    log = []
    for i in range(n):
        log = append_audit(log, message({"users": [f"u{i}"]}))
    return log


def test_chain_starts_at_zero_and_links():
    log = chain(3)
    assert log[0].prev_hash == ZERO_HASH
    assert [r.prev_hash for r in log[1:]] == [r.record_hash for r in log[:-1]]
    assert verify_chain(log) and verify_chain([])


def test_record_hash_format():
    (rec,) = chain(1)
    assert rec.record_hash == AuditRecord.digest(0, "leaf", rec.payload_hash, ZERO_HASH)


def test_any_flipped_character_breaks_the_chain():
    log = chain(3)
    for i, rec in enumerate(log):
        for key in ("payload_hash", "prev_hash", "record_hash"):
            value = getattr(rec, key)
            flipped = value[:5] + ("0" if value[5] != "0" else "1") + value[6:]
            bad = list(log)
            bad[i] = replace(rec, **{key: flipped})
            assert not verify_chain(bad), (i, key)


def test_dropped_or_reordered_records_break_the_chain():
    log = chain(3)
    assert not verify_chain(log[1:])
    assert not verify_chain([log[0], log[2], log[1]])


# -- scenario loading -----------------------------------------------------------

def test_bundles_load():
    for name in ("meeting-room", "two-users", "cross-department"):
        sc = read_bundle(SCENARIOS / name)
        assert sc.agents and sc.max_rounds > 0


def test_missing_bundle_file(bundle):
    path = bundle("meeting-room")
    (path / "schemas.json").unlink()
    with pytest.raises(FileNotFoundError):
        read_bundle(path)


def test_escalate_field_outside_the_schema(bundle):
    path = bundle("two-users")
    model = (path / "model.big").read_text()
    (path / "model.big").write_text(model.replace("users=labels(Person)",
                                                  "users=labels(Person), raw_audio=rule"))
    with pytest.raises(StaticSchemaViolation, match="raw_audio"):
        read_bundle(path)


def test_escalate_field_of_the_wrong_type(bundle):
    path = bundle("two-users")
    model = (path / "model.big").read_text()
    (path / "model.big").write_text(model.replace("users=labels(Person)", "users=count(Person)"))
    with pytest.raises(StaticSchemaViolation, match="users"):
        read_bundle(path)


def test_missing_escalate_field(bundle):
    path = bundle("two-users")
    edit_json(path / "schemas.json", lambda d: d["schemas"][0]["fields"].append(
        {"name": "room", "type": "string"}))
    with pytest.raises(StaticSchemaViolation, match="room"):
        read_bundle(path)


@pytest.mark.parametrize("edit, message", [
    (lambda d: d.update(agents=[]), "no agents"),
    (lambda d: d["agents"][0].update(scope="room-z.floor-1.building-1"), "room-z"),
    (lambda d: d["agents"][0].update(rules=["nope"]), "unknown rule"),
    (lambda d: d["agents"][0].update(scope="projector.room-a.floor-1.building-1"), "atomic"),
    (lambda d: d["agents"][1].update(scope=None), "needs a scope"),
    (lambda d: d["agents"][0].update(escalate_to="leaf-room-a"), "higher tier"),
    (lambda d: d["agents"][0]["manifest"].update(scope="room-b.floor-1.building-1"), "outside"),
    (lambda d: d["agents"][1]["decisions"][0].update(confidence=1.5), r"\[0, 1\]"),
])
def test_agent_validation(bundle, edit, message):
    path = bundle("meeting-room")
    edit_json(path / "agents.json", edit)
    with pytest.raises(ValidationError, match=message):
        read_bundle(path)


def test_event_validation(bundle):
    path = bundle("meeting-room")
    edit_json(path / "events.json", lambda d: d["events"].append(
        {"round": 1, "scope": None, "kind": "insert", "control": "Ghost"}))
    with pytest.raises(ValidationError, match="Ghost"):
        read_bundle(path)


# -- routing and triggers -------------------------------------------------------

@pytest.fixture
def meeting():
    return read_bundle(SCENARIOS / "meeting-room")


def test_routing(meeting):
    leaf, hub, central = (meeting.agent(a) for a in ("leaf-room-a", "hub-floor-1", "central"))
    assert escalation_target(meeting.agents, leaf, "unknown-state") == hub
    assert escalation_target(meeting.agents, hub, "uncertainty") == central
    assert escalation_target(meeting.agents, leaf, "scope-violation") == central
    assert escalation_target(meeting.agents, central, "uncertainty") is None
    assert event_handler(meeting.agents, "room-a.floor-1.building-1") == leaf
    assert event_handler(meeting.agents, "room-b.floor-1.building-1") == hub
    assert event_handler(meeting.agents, None) == central


def test_unknown_signal_escalates(meeting):
    leaf = meeting.agent("leaf-room-a")
    (intent,) = evaluate_triggers(meeting, leaf, [InboxItem("signal:face-unknown", "sensor")])
    assert intent.kind == "unknown-state"
    assert intent.payload == {"descriptor": "signal:face-unknown"}


def test_sensor_touching_rule_controls_is_recognized(meeting):
    leaf = meeting.agent("leaf-room-a")
    item = InboxItem("insert:Person", "sensor", ("Person", "Users"))
    assert evaluate_triggers(meeting, leaf, [item]) == []


def test_low_confidence_escalates(meeting):
    hub = meeting.agent("hub-floor-1")
    (intent,) = evaluate_triggers(meeting, hub, [InboxItem("message:unknown-state-v1", "message")])
    assert intent.kind == "uncertainty"
    assert intent.payload == {"action": "notify-security", "confidence_pct": 40}


def test_confident_decision_stays_local(meeting):
    central = meeting.agent("central")
    assert evaluate_triggers(meeting, central, [InboxItem("message:uncertainty-v1", "message")]) == []


def test_out_of_manifest_decision_escalates_to_central():
    sc = read_bundle(SCENARIOS / "cross-department")
    dept = sc.agent("dept-a")
    (intent,) = evaluate_triggers(sc, dept, [InboxItem("signal:badge-alarm", "sensor")])
    assert intent.kind == "scope-violation"
    assert intent.payload["refs"] == ["room-a.floor-1.building-1", "room-c.floor-2.building-1"]
    assert escalation_target(sc.agents, dept, intent.kind).id == "central"


# -- rounds ---------------------------------------------------------------------

def test_meeting_room_story():
    trace = run_sim(read_bundle(SCENARIOS / "meeting-room"))
    sent = [(m.round, m.sender, m.recipient, m.schema_id) for m in trace.messages]
    assert sent == [(2, "leaf-room-a", "hub-floor-1", "unknown-state-v1"),
                    (3, "hub-floor-1", "central", "uncertainty-v1")]
    fired = trace.events("rule-fired")
    assert [(e["agent"], e["rule"]) for e in fired] == [("leaf-room-a", "shutdown_nodes")]
    assert trace.events("message-rejected") == []
    assert verify_chain(trace.audit) and len(trace.audit) == len(trace.messages)
    controls = sorted(v.control for v in trace.final.nodes.values())
    assert controls.count("Node") == 1 and "Users" not in controls


def test_two_users_story():
    trace = run_sim(read_bundle(SCENARIOS / "two-users"))
    (msg,) = trace.messages
    assert (msg.sender, msg.recipient, msg.schema_id) == ("leaf-room-a", "hub-floor-1", "presence-v1")
    assert msg.payload == {"users": ["bob", "carol"]}
    decisions = trace.events("decision")
    assert [(d["agent"], d["action"]) for d in decisions] == [("hub-floor-1", "start-recording")]


def test_cross_department_story():
    trace = run_sim(read_bundle(SCENARIOS / "cross-department"))
    (msg,) = trace.messages
    assert (msg.sender, msg.recipient, msg.kind) == ("dept-a", "central", "scope-violation")
    assert [d["action"] for d in trace.events("decision")] == ["acknowledge"]


def test_zero_rounds():
    sc = read_bundle(SCENARIOS / "meeting-room")
    trace = run_sim(sc, 0)
    assert trace.rounds == [] and trace.final_hash == sc.world.canonical_hash()
    assert trace.to_jsonl().count("\n") == 2


def test_extra_field_is_rejected_and_changes_nothing():
    state = initial_state(read_bundle(SCENARIOS / "two-users"))
    state, _ = run_round(state)
    (msg,) = state.queue
    bloated = EscalationMessage.build(msg.sender, msg.recipient, msg.round, msg.schema_id,
                                      dict(msg.payload, raw_audio="..."), msg.token)
    tampered, events = run_round(replace(state, queue=(bloated,)))
    (rej,) = [e for e in events if e["kind"] == "message-rejected"]
    assert (rej["reason"], rej["detail"]) == ("SchemaMismatch", "raw_audio")
    silent, _ = run_round(replace(state, queue=()))
    assert tampered.world.canonical_hash() == silent.world.canonical_hash()


def test_wrong_secret_token_rejected_in_a_run(bundle):
    path = bundle("two-users")
    edit_json(path / "agents.json", lambda d: d["agents"][0].update(token_secret="00" * 32))
    trace = run_sim(read_bundle(path))
    (rej,) = trace.events("message-rejected")
    assert rej["reason"] == "BadSignature"
    assert trace.events("decision") == []


def test_expired_token_in_a_run(bundle):
    path = bundle("two-users")
    edit_json(path / "agents.json", lambda d: d["agents"][0].update(token_expiry=1))
    (rej,) = run_sim(read_bundle(path)).events("message-rejected")
    assert rej["reason"] == "Expired"


def test_unreachable_higher_tier_is_logged():
    sc = read_bundle(SCENARIOS / "meeting-room").without_agent("central")
    trace = run_sim(sc)
    (lost,) = trace.events("escalation-undeliverable")
    assert (lost["agent"], lost["trigger"]) == ("hub-floor-1", "uncertainty")


def test_runs_are_byte_identical(tmp_path):
    a = run_sim(load_scenario(SCENARIOS / "meeting-room"))
    b = run_sim(load_scenario(SCENARIOS / "meeting-room"))
    assert a.to_jsonl() == b.to_jsonl() and a.audit_jsonl() == b.audit_jsonl()
    trace_path, audit_path = a.write(tmp_path)
    assert read_audit_jsonl(audit_path.read_text()) == list(a.audit)
    assert trace_path.read_text().endswith("\n")


def test_central_is_not_needed_when_nothing_reaches_it():
    sc = read_bundle(SCENARIOS / "two-users")
    assert run_sim(sc).hashes == run_sim(sc.without_agent("central")).hashes


def test_local_step_limit(bundle):
    path = bundle("meeting-room")
    model = (path / "model.big").read_text()
    (path / "model.big").write_text(model + "\nreact spin = Users.(s) --> Users.(s);\n")
    edit_json(path / "agents.json", lambda d: d["agents"][0].update(rules=["spin"]))
    trace = run_sim(read_bundle(path), 1)
    assert len(trace.events("rule-fired")) == 16
    assert len(trace.events("local-step-limit")) == 1
