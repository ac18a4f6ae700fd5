import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigspace import Bigraph, Node, Root, juxtapose, renumber
from bigspace.dsl import bigraph_from_expr
from bigspace.errors import NotGround, RedexNotSolid, SizeLimit
from bigspace.matching import count_occurrences, find_occurrences
from bigspace.oracle import occurrence_for, oracle_occurrences

from conftest import ROOM_SIG
from generators import SIGNATURE, match_pair

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def expr(text, sig=ROOM_SIG):
    return bigraph_from_expr(text, sig)


def encodings(occs):
    return [o.encode() for o in occs]


# -- examples -------------------------------------------------------------------

def test_shutdown_redex_has_two_occurrences(two_node_room, shutdown_program):
    redex = shutdown_program.rules["shutdown_nodes"].redex
    occs = find_occurrences(two_node_room, redex)
    assert len(occs) == 2
    assert encodings(occs) == encodings(oracle_occurrences(two_node_room, redex))
    # each occurrence picks one Node and leaves the other as the parameter
    nodes = sorted(n for n, v in two_node_room.nodes.items() if v.control == "Node")
    picked = sorted(set(o.node_map.values()) & set(nodes) for o in occs)
    assert picked == [{nodes[0]}, {nodes[1]}]
    for o in occs:
        (fill,) = o.site_fill.values()
        assert len(fill) == 1 and fill[0] in nodes and fill[0] not in o.node_map.values()


def test_agent_matches_itself_once():
    agent = expr("MeetingRoom.(Users.(Person))")
    (occ,) = find_occurrences(agent, agent)
    assert sorted(occ.node_map.values()) == sorted(agent.nodes)
    assert count_occurrences(agent, agent) == 1


def test_nonempty_users_blocks_the_rule(shutdown_program):
    agent = expr("/x1 (MeetingRoom.(Users.(Person) | Node{x1}))")
    redex = shutdown_program.rules["shutdown_nodes"].redex
    assert find_occurrences(agent, redex) == []
    assert oracle_occurrences(agent, redex) == []


def test_empty_agent(shutdown_program):
    redex = shutdown_program.rules["shutdown_nodes"].redex
    assert find_occurrences(Bigraph.empty(ROOM_SIG), redex) == []
    assert oracle_occurrences(Bigraph.empty(ROOM_SIG), redex) == []
    assert count_occurrences(Bigraph.empty(ROOM_SIG), redex) == 0


def test_oracle_size_limit(shutdown_program):
    agent = expr(" | ".join(["Person"] * 11))
    with pytest.raises(SizeLimit):
        oracle_occurrences(agent, expr("Person"))


def test_redex_restrictions():
    with pytest.raises(RedexNotSolid, match="two|2 sites"):
        find_occurrences(expr("Users"), expr("Users.(s | t)"))
    with pytest.raises(RedexNotSolid, match="root"):
        find_occurrences(expr("Users"), expr("s"))
    with pytest.raises(RedexNotSolid, match="no node"):
        find_occurrences(expr("Users"), expr("Users || ()"))


def test_agent_must_be_ground():
    with pytest.raises(NotGround):
        find_occurrences(expr("Users.(s)"), expr("Users.(s)"))


def test_closed_edge_must_match_exactly():
    # the redex edge has one point; an agent edge with two points is not an image
    agent = expr("/x (MeetingRoom.(Node{x} | Node{x}))")
    assert count_occurrences(agent, expr("/y (Node{y})")) == 0
    assert count_occurrences(agent, expr("Node{y}")) == 2


def test_outer_names_fuse_to_one_agent_link():
    agent = expr("/x /z (MeetingRoom.(Node{x} | Node{x} | Node{z}))")
    redex = expr("MeetingRoom.(Node{y} | Node{y} | s)")
    occs = find_occurrences(agent, redex)
    assert encodings(occs) == encodings(oracle_occurrences(agent, redex))
    assert len(occs) == 2  # the shared-edge pair, in either order


def test_juxtaposed_regions_may_share_a_parent():
    agent = expr("MeetingRoom.(Users | Person)")
    redex = expr("Users || Person")
    (occ,) = find_occurrences(agent, redex)
    assert occ.region_parents[0] == occ.region_parents[1]


def test_labels_are_wildcards():
    agent = expr("Users.(Person)")
    labelled = Bigraph(agent.signature,
                       {n: v if v.control != "Person" else Node(v.id, v.control, v.ports, "alice")
                        for n, v in agent.nodes.items()},
                       agent.parent, agent.interface, agent.edges)
    assert count_occurrences(labelled, expr("Person")) == 1


# -- properties -----------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(seeds)
def test_matches_oracle(seed):
    agent, redex = match_pair(random.Random(seed))
    assert encodings(find_occurrences(agent, redex)) == encodings(oracle_occurrences(agent, redex))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_occurrences_recheck_independently(seed):
    agent, redex = match_pair(random.Random(seed))
    for occ in find_occurrences(agent, redex):
        again = occurrence_for(agent, redex, occ.node_map)
        assert again is not None and again.encode() == occ.encode()


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_count_invariant_under_renumbering(seed):
    rng = random.Random(seed)
    agent, redex = match_pair(rng)
    ids = list(agent.nodes)
    rng.shuffle(ids)
    moved = renumber(agent, {n: 500 + i for i, n in enumerate(ids)})
    assert count_occurrences(moved, redex) == count_occurrences(agent, redex)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_unrelated_region_leaves_count_alone(seed):
    rng = random.Random(seed)
    agent, redex = match_pair(rng)
    used = {v.control for v in redex.nodes.values()}
    spare = [c for c in ("A", "E") if c not in used]
    if not spare:
        return
    extra = bigraph_from_expr(f"{spare[0]}" if spare[0] == "E" else "A.(A)", SIGNATURE)
    # merge the new subtree into the existing root so region count is unchanged
    bigger = juxtapose(agent, extra)
    parent = {k: (Root(0) if v == Root(agent.interface.roots) else v) for k, v in bigger.parent.items()}
    bigger = replace(bigger, parent=parent, interface=replace(bigger.interface, roots=agent.interface.roots))
    assert count_occurrences(bigger, redex) == count_occurrences(agent, redex)
