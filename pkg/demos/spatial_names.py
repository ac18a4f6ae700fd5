"""Spatial names from a building scan, device swap and a scoped rewrite."""
from dataclasses import replace
from pathlib import Path

from bigspace import iso_eq
from bigspace.dsl import load_program
from bigspace.matching import find_occurrences
from bigspace.rewriting import apply
from bigspace.spatial import (extract_scope, insert_node, load_scan, name_table, reattach,
                              remove_subtree, resolve)

ROOT = Path(__file__).resolve().parent.parent
office = load_scan(ROOT / "tests" / "fixtures" / "office_scan.json")

for name, node in name_table(office):
    print(f"{node:3d}  {name}")

# swap the projector: same name, new node
projector = resolve(office, "projector.room-a.floor-1.building-1")
room = office.parent[projector]
swapped, new = insert_node(remove_subtree(office, projector), room, "Projector", "projector",
                           office.nodes[projector].ports)
print("projector was", projector, "now", resolve(swapped, "projector.room-a.floor-1.building-1"))

# room-a as a scoped view; the hub link shows up as a boundary name
scoped = extract_scope(office, room)
print("boundary:", dict(scoped.boundary))

# rewrite inside the room, put it back, compare with rewriting the whole building
rule = load_program((ROOT / "tests" / "fixtures" / "shutdown.big").read_text()).rules["shutdown_nodes"]
occ = find_occurrences(scoped.view, rule.redex)[0]
local = reattach(office, replace(scoped, view=apply(scoped.view, rule, occ)))
whole = apply(office, rule, find_occurrences(office, rule.redex)[0])
print("local == global:", iso_eq(local, whole))
