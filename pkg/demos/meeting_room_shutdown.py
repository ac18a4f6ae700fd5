"""Power down idle meeting-room nodes with one reaction rule."""
from pathlib import Path

from bigspace.dsl import load_program, pretty_print
from bigspace.matching import find_occurrences
from bigspace.rewriting import run

ROOT = Path(__file__).resolve().parent.parent
prog = load_program((ROOT / "tests" / "fixtures" / "shutdown.big").read_text())
rule = prog.rules["shutdown_nodes"]
room = prog.bigraphs["meeting"]

print(pretty_print(prog))

# two Nodes, so two ways to match: each picks one Node, the other falls into `rest`
for occ in find_occurrences(room, rule.redex):
    print("occurrence", occ.encode())

# Users.() is consumed by the rule, so it can fire only once
trace = run(prog.brs_spec(), max_steps=10)
print(trace.to_jsonl(), end="")
print("survivors:", sorted(v.control for v in trace.final.nodes.values()))
