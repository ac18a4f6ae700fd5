"""Break the audit chain by editing one character."""
from dataclasses import replace
from pathlib import Path

from bigspace.sim import read_bundle, run_sim, verify_chain

ROOT = Path(__file__).resolve().parent.parent
trace = run_sim(read_bundle(ROOT / "scenarios" / "meeting-room"))
log = list(trace.audit)
print(trace.audit_jsonl(), end="")
print("intact:", verify_chain(log))

rec = log[0]
edited = rec.payload_hash[:-1] + ("0" if rec.payload_hash[-1] != "0" else "1")
log[0] = replace(rec, payload_hash=edited)
print("after editing record 0:", verify_chain(log))
