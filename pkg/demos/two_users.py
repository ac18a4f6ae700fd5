"""Rule-driven escalation with a schema contract, and two ways to get rejected."""
from dataclasses import replace
from pathlib import Path

from bigspace.sim import EscalationMessage, initial_state, read_bundle, run_round, run_sim

ROOT = Path(__file__).resolve().parent.parent
scenario = read_bundle(ROOT / "scenarios" / "two-users")
print("presence-v1:", scenario.contracts["presence-v1"].to_json())

trace = run_sim(scenario)
for m in trace.messages:
    print(f"r{m.round} {m.sender} -> {m.recipient} {m.schema_id} {m.payload}")

# same message with an extra field
state, _ = run_round(initial_state(scenario))
msg = state.queue[0]
extra = EscalationMessage.build(msg.sender, msg.recipient, msg.round, msg.schema_id,
                                dict(msg.payload, raw_audio="..."), msg.token)
_, events = run_round(replace(state, queue=(extra,)))
print([e for e in events if e["kind"] == "message-rejected"])

# a token signed with some other key
leaf = scenario.agent("leaf-room-a")
rogue = replace(scenario, agents=tuple(replace(a, token_secret=b"rogue") if a is leaf else a
                                       for a in scenario.agents))
print([e["reason"] for e in run_sim(rogue).events("message-rejected")])
