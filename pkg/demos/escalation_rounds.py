"""Round-by-round view of the meeting-room scenario."""
import json
from pathlib import Path

from bigspace.sim import read_bundle, run_sim, verify_chain

ROOT = Path(__file__).resolve().parent.parent
scenario = read_bundle(ROOT / "scenarios" / "meeting-room")

for agent in sorted(scenario.agents, key=lambda a: a.order):
    print(f"{agent.tier!s:9} {agent.id:12} scope={agent.scope}")

trace = run_sim(scenario)
for rnd in trace.rounds:
    print(f"\nround {rnd.round}  {rnd.hash[:12]}")
    for ev in rnd.events:
        print("  ", json.dumps(ev, sort_keys=True))

# r2: the leaf cannot place "face-unknown" and asks the hub
# r3: the hub is only 40% sure and asks central; alice leaves and the nodes power down
print("\nmessages:", [(m.sender, m.recipient, m.schema_id) for m in trace.messages])
print("audit chain ok:", verify_chain(trace.audit))
