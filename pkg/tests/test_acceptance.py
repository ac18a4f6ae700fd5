"""Acceptance criteria 1-9.

Each criterion prints one ``criterion N: PASS|FAIL ...`` line, under pytest
(printed past output capture) and when run directly:

    python3 tests/test_acceptance.py
"""
import random
import sys
import time
from dataclasses import replace
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from bigspace import iso_eq, validate  # noqa: E402
from bigspace.dsl import load_program, pretty_print  # noqa: E402
from bigspace.matching import find_occurrences  # noqa: E402
from bigspace.oracle import oracle_occurrences  # noqa: E402
from bigspace.rewriting import apply, run  # noqa: E402
from bigspace.sim import (  # noqa: E402
    EscalationMessage,
    initial_state,
    mint_token,
    read_bundle,
    run_round,
    run_sim,
    validate_escalation,
    verify_chain,
)
from bigspace.spatial import (  # noqa: E402
    ScopedView,
    extract_scope,
    insert_node,
    load_scan,
    name_table,
    reattach,
    remove_subtree,
    resolve,
    spatial_name,
)

from conftest import FIXTURES, SCENARIOS  # noqa: E402
from generators import (  # noqa: E402
    application,
    frame_violations,
    match_pair,
    programs_iso,
    random_program_source,
)

PROJECTOR = "projector.room-a.floor-1.building-1"

# shutdown rule with the two-node room as init
SHUTDOWN = """\
ctrl MeetingRoom = 0;
ctrl Users = 0;
atomic ctrl Node = 1;
big meeting = /x1 /x2 (MeetingRoom.(Users.() | Node{x1} | Node{x2}));

    react shutdown_nodes =
    /x (MeetingRoom.(Users.() || Node{x} || rest))
    --> MeetingRoom.(rest);

    begin brs
    init meeting;
    rules = [{shutdown_nodes}];
    end
"""


def shutdown_end_to_end():
    start = time.perf_counter()
    prog = load_program(SHUTDOWN)
    trace = run(prog.brs_spec(), 100)
    elapsed = time.perf_counter() - start
    controls = sorted(v.control for v in trace.final.nodes.values())
    assert len(trace.steps) == 1 and trace.reason == "quiescent", trace.steps
    assert "Users" not in controls and controls.count("Node") == 1, controls
    assert elapsed < 1.0, elapsed
    return f"1 step, final {controls}, {elapsed * 1000:.0f} ms"


def matcher_oracle(pairs=500):
    start = time.perf_counter()
    rng = random.Random(20240601)
    total = 0
    for i in range(pairs):
        agent, redex = match_pair(rng)
        assert len(agent.nodes) <= 10 and len(redex.nodes) <= 5
        fast = [o.encode() for o in find_occurrences(agent, redex)]
        slow = [o.encode() for o in oracle_occurrences(agent, redex)]
        assert fast == slow, f"pair {i}: {len(fast)} vs {len(slow)}"
        total += len(fast)
    elapsed = time.perf_counter() - start
    assert elapsed < 60, elapsed
    return f"{pairs} pairs agree, {total} occurrences, {elapsed:.1f} s"


def rewrite_frame(apps=500):
    rng = random.Random(7)
    done = 0
    violations = 0
    while done < apps:
        found = application(rng)
        if found is None:
            continue
        agent, rule, occ = found
        out = apply(agent, rule, occ)
        violations += len(validate(out)) + len(frame_violations(agent, rule, occ, out))
        done += 1
    assert violations == 0, violations
    return f"{done} applications, 0 violations"


def spatial_naming():
    office = load_scan(FIXTURES / "office_scan.json")
    lines = [f"{name}\t{n}" for name, n in name_table(office)]
    n = resolve(office, PROJECTOR)
    assert f"{PROJECTOR}\t{n}" in lines
    labelled = [m for m, v in office.nodes.items() if v.label is not None]
    assert all(resolve(office, spatial_name(office, m)) == m for m in labelled)
    gone = remove_subtree(office, n)
    swapped, new = insert_node(gone, office.parent[n], "Projector", "projector", office.nodes[n].ports)
    assert str(spatial_name(swapped, new)) == PROJECTOR and resolve(swapped, PROJECTOR) == new != n
    return f"{len(labelled)}/{len(labelled)} names round-trip, swap {n} -> {new}"


def scope_locality():
    office = load_scan(FIXTURES / "office_scan.json")
    places = [n for n in sorted(office.nodes) if not office.control_of(n).atomic]
    for p in places:
        assert iso_eq(reattach(office, extract_scope(office, p)), office), p
    rule = load_program(SHUTDOWN).rules["shutdown_nodes"]
    room = resolve(office, "room-a.floor-1.building-1")
    scoped = extract_scope(office, room)
    local_occs = find_occurrences(scoped.view, rule.redex)
    global_occs = {o.key(): o for o in find_occurrences(office, rule.redex)}
    assert local_occs and all(o.key() in global_occs for o in local_occs)
    for occ in local_occs:
        merged = reattach(office, ScopedView(apply(scoped.view, rule, occ), scoped.boundary, room))
        assert iso_eq(merged, apply(office, rule, global_occs[occ.key()]))
    return f"{len(places)} places round-trip, {len(local_occs)} local rewrites match global"


def escalation_scoping():
    sc = read_bundle(SCENARIOS / "two-users")
    trace = run_sim(sc)
    (msg,) = trace.messages
    leaf, hub = sc.agent(msg.sender), sc.agent(msg.recipient)
    assert (leaf.tier.name, hub.tier.name) == ("LEAF", "DELEGATED")
    assert sc.contracts[msg.schema_id].mismatch(msg.payload) is None
    assert sorted(msg.payload) == list(sc.contracts["presence-v1"].field_names)

    state, _ = run_round(initial_state(sc))
    (queued,) = state.queue
    bloated = EscalationMessage.build(queued.sender, queued.recipient, queued.round, queued.schema_id,
                                      dict(queued.payload, raw_audio="..."), queued.token)
    tampered, events = run_round(replace(state, queue=(bloated,)))
    reasons = [e["reason"] for e in events if e["kind"] == "message-rejected"]
    assert reasons == ["SchemaMismatch"], reasons
    silent, _ = run_round(replace(state, queue=()))
    assert tampered.world.canonical_hash() == silent.world.canonical_hash()

    forged = mint_token(leaf.id, leaf.manifest.scope, queued.token.schemas, 0, 99, b"wrong secret")
    tiers = {a.id: a.tier for a in sc.agents}
    why = validate_escalation(replace(queued, token=forged), sc.contracts, sc.secret, 2, tiers)
    assert why is not None and why.reason == "BadSignature"
    return f"1 message {msg.payload}, extra field -> SchemaMismatch, wrong secret -> BadSignature"


def audit_chain():
    trace = run_sim(read_bundle(SCENARIOS / "meeting-room"))
    log = list(trace.audit)
    assert verify_chain(log) and len(log) == len(trace.messages) > 0
    flips = 0
    for i, rec in enumerate(log):
        for key in ("payload_hash", "prev_hash", "record_hash"):
            value = getattr(rec, key)
            for pos in range(len(value)):
                flipped = value[:pos] + ("1" if value[pos] == "0" else "0") + value[pos + 1:]
                bad = list(log)
                bad[i] = replace(rec, **{key: flipped})
                assert not verify_chain(bad), (i, key, pos)
                flips += 1
    return f"{len(log)} records = {len(trace.messages)} messages, {flips} single flips all detected"


def determinism(tmp):
    outputs = []
    for name in ("a", "b"):
        trace = run_sim(read_bundle(SCENARIOS / "meeting-room"))
        paths = trace.write(Path(tmp) / name)
        outputs.append([p.read_bytes() for p in paths])
    assert outputs[0] == outputs[1]
    sc = read_bundle(SCENARIOS / "two-users")
    with_central = run_sim(sc)
    assert all(m.recipient != "central" for m in with_central.messages)
    without = run_sim(sc.without_agent("central"))
    assert with_central.hashes == without.hashes
    return f"byte-identical reruns, {len(without.hashes)} round hashes unchanged without central"


def dsl_round_trip(programs=200):
    rng = random.Random(99)
    rules = 0
    for i in range(programs):
        p = load_program(random_program_source(rng))
        assert programs_iso(load_program(pretty_print(p)), p), i
        rules += len(p.rules)
    return f"{programs} programs ({rules} rules) round-trip"


CRITERIA = [
    (1, "meeting-room shutdown end to end", shutdown_end_to_end),
    (2, "matcher-oracle equivalence", matcher_oracle),
    (3, "rewrite validity and frame", rewrite_frame),
    (4, "spatial naming", spatial_naming),
    (5, "scope round-trip and locality", scope_locality),
    (6, "escalation scoping", escalation_scoping),
    (7, "audit chain", audit_chain),
    (8, "determinism and reliability", determinism),
    (9, "DSL round-trip", dsl_round_trip),
]


def check(number, title, fn, *args):
    try:
        detail = fn(*args)
    except Exception as exc:  # report, then let the caller fail
        return False, f"criterion {number}: FAIL {title}: {type(exc).__name__}: {exc}"
    return True, f"criterion {number}: PASS {title}: {detail}"


@pytest.mark.parametrize("number, title, fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, fn, capsys, tmp_path):
    args = (tmp_path,) if fn is determinism else ()
    ok, line = check(number, title, fn, *args)
    with capsys.disabled():
        print(f"\n{line}")
    assert ok, line


if __name__ == "__main__":
    import tempfile

    failed = 0
    for number, title, fn in CRITERIA:
        with tempfile.TemporaryDirectory() as tmp:
            ok, line = check(number, title, fn, *((tmp,) if fn is determinism else ()))
        print(line)
        failed += not ok
    sys.exit(1 if failed else 0)
