"""Brute-force occurrence enumeration, used to cross-check the matcher.

Nothing here shares code with :mod:`bigspace.matching` beyond the
:class:`Occurrence` record and the solidity check: candidate maps are
enumerated exhaustively and each one is tested directly against the
occurrence conditions.
"""
from __future__ import annotations

from typing import Dict, List, Mapping, Optional

from .bigraph import Bigraph, Edge, LinkTarget, Root
from .errors import NotGround, SizeLimit
from .matching import Occurrence, check_solid

MAX_AGENT_NODES = 10


def occurrence_for(agent: Bigraph, redex: Bigraph, node_map: Mapping[int, int]) -> Optional[Occurrence]:
    """The occurrence determined by ``node_map``, or None if it is not one."""
    if set(node_map) != set(redex.nodes):
        return None
    image = list(node_map.values())
    if len(set(image)) != len(image) or not all(a in agent.nodes for a in image):
        return None
    image_set = set(image)

    for v, a in node_map.items():
        rv, av = redex.nodes[v], agent.nodes[a]
        if rv.control != av.control:
            return None
        if rv.label is not None and rv.label != av.label:
            return None

    # every redex parent edge is an agent parent edge
    for v in redex.nodes:
        p = redex.parent[v]
        if isinstance(p, int) and agent.parent[node_map[v]] != node_map[p]:
            return None

    # each region sits under one context place that is outside the match
    region_parents = []
    for r in range(redex.interface.roots):
        tops = [v for v in redex.nodes if redex.parent[v] == Root(r)]
        places = {agent.parent[node_map[v]] for v in tops}
        if len(places) != 1:
            return None
        place = places.pop()
        if isinstance(place, int):
            chain = [place]
            q = agent.parent[place]
            while isinstance(q, int):
                chain.append(q)
                q = agent.parent[q]
            if image_set.intersection(chain):
                return None
        region_parents.append(place)

    # exactness: children not matched by redex nodes must go to the site
    site_fill: Dict[int, tuple] = {}
    for v in redex.nodes:
        a = node_map[v]
        matched_kids = {node_map[c] for c, p in redex.parent.items() if p == v and isinstance(c, int)}
        sites = [s for s, p in redex.parent.items() if p == v and not isinstance(s, int)]
        rest = tuple(sorted(c for c, p in agent.parent.items() if p == a and c not in matched_kids))
        if sites:
            site_fill[sites[0].index] = rest
        elif rest:
            return None

    # links
    link_map: Dict[LinkTarget, LinkTarget] = {}
    for v in sorted(redex.nodes):
        for i, rt in enumerate(redex.nodes[v].ports):
            at = agent.nodes[node_map[v]].ports[i]
            if isinstance(rt, Edge) and not isinstance(at, Edge):
                return None
            if link_map.setdefault(rt, at) != at:
                return None
    targets = [t for k, t in link_map.items() if isinstance(k, Edge)]
    if len(set(targets)) != len(targets):
        return None
    for e in redex.edges:
        pts = [(v, i) for v in redex.nodes for i, t in enumerate(redex.nodes[v].ports) if t == Edge(e)]
        if not pts:
            continue
        want = {(node_map[v], i) for v, i in pts}
        target = link_map[Edge(e)]
        have = {(a, i) for a in agent.nodes for i, t in enumerate(agent.nodes[a].ports) if t == target}
        if want != have:
            return None

    return Occurrence(dict(node_map), site_fill, link_map, tuple(region_parents))


def oracle_occurrences(agent: Bigraph, redex: Bigraph) -> List[Occurrence]:
    if len(agent.nodes) > MAX_AGENT_NODES:
        raise SizeLimit(f"oracle handles at most {MAX_AGENT_NODES} agent nodes, got {len(agent.nodes)}")
    if not agent.is_ground:
        raise NotGround("agent must have no sites and no inner names")
    check_solid(redex)

    rnodes = sorted(redex.nodes)
    cands = {
        v: [a for a in sorted(agent.nodes) if agent.nodes[a].control == redex.nodes[v].control]
        for v in rnodes
    }
    out: List[Occurrence] = []
    current: Dict[int, int] = {}

    def enumerate_maps(k: int):
        if k == len(rnodes):
            occ = occurrence_for(agent, redex, current)
            if occ is not None:
                out.append(occ)
            return
        v = rnodes[k]
        for a in cands[v]:
            if a in current.values():
                continue
            current[v] = a
            enumerate_maps(k + 1)
            del current[v]

    enumerate_maps(0)
    out.sort(key=Occurrence.key)
    return out


def occurrence_is_valid(agent: Bigraph, redex: Bigraph, occ: Occurrence) -> bool:
    fresh = occurrence_for(agent, redex, occ.node_map)
    return fresh is not None and fresh.encode() == occ.encode()

