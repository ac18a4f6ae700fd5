"""Finding occurrences of a redex inside a ground agent bigraph.

An occurrence fixes where every redex node lands.  Because redexes are
required to be solid (no root-level sites, at most one site per parent, no
empty regions) the parameter under each site and the link assignment follow
from the node map alone, so the search only enumerates node maps.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .bigraph import Bigraph, Edge, LinkTarget, Name, Parent, Root, Site, canonical_dumps
from .errors import NotGround, RedexNotSolid


@dataclass(frozen=True)
class Occurrence:
    node_map: Mapping[int, int]
    site_fill: Mapping[int, Tuple[int, ...]] = field(default_factory=dict)
    link_map: Mapping[LinkTarget, LinkTarget] = field(default_factory=dict)
    region_parents: Tuple[Parent, ...] = ()

    def key(self) -> Tuple[int, ...]:
        """Agent ids of the redex nodes, in redex id order."""
        return tuple(self.node_map[v] for v in sorted(self.node_map))

    def to_json(self) -> dict:
        def link(t):
            return f"e{t.id}" if isinstance(t, Edge) else f"n:{t.name}"

        return {
            "nodes": [[v, self.node_map[v]] for v in sorted(self.node_map)],
            "sites": [[s, list(self.site_fill[s])] for s in sorted(self.site_fill)],
            "links": sorted([link(k), link(v)] for k, v in self.link_map.items()),
            "regions": [f"r{p.index}" if isinstance(p, Root) else f"n{p}" for p in self.region_parents],
        }

    def encode(self) -> str:
        return canonical_dumps(self.to_json())


def check_solid(redex: Bigraph, error=RedexNotSolid) -> None:
    itf = redex.interface
    if itf.inner:
        raise error("redex has inner names")
    if itf.roots < 1:
        raise error("redex has no regions")
    site_parents = Counter()
    for i in range(itf.sites):
        p = redex.parent.get(Site(i))
        if p is None:
            raise error(f"site {i} has no parent")
        if isinstance(p, Root):
            raise error(f"site {i} is a root")
        site_parents[p] += 1
    for p, n in site_parents.items():
        if n > 1:
            raise error(f"node {p} has {n} sites")
    for r in range(itf.roots):
        if not redex.node_children(Root(r)):
            raise error(f"region {r} contains no node")


def is_solid(redex: Bigraph) -> bool:
    try:
        check_solid(redex)
    except RedexNotSolid:
        return False
    return True


# -- search plan ------------------------------------------------------------

@dataclass(frozen=True)
class _Step:
    node: int
    via: str            # anchor | child_of | parent_of | region
    ref: int = -1       # redex node (child_of/parent_of) or region index


def _plan(agent: Bigraph, redex: Bigraph) -> List[_Step]:
    """Order redex nodes so every node after a region's anchor is reachable
    from an earlier one through the place graph."""
    freq = Counter(n.control for n in agent.nodes.values())
    rarity = lambda v: (freq.get(redex.nodes[v].control, 0), v)

    regions: Dict[int, List[int]] = {}
    for v in redex.nodes:
        r = redex.root_of(v)
        regions.setdefault(r.index, []).append(v)
    order = sorted(regions, key=lambda r: (min(rarity(v) for v in regions[r]), r))

    steps: List[_Step] = []
    for r in order:
        anchor = min(regions[r], key=rarity)
        steps.append(_Step(anchor, "anchor", r))
        seen = {anchor}
        queue = deque([anchor])
        while queue:
            v = queue.popleft()
            p = redex.parent[v]
            nbrs: List[Tuple[int, str, int]] = []
            if isinstance(p, int):
                nbrs.append((p, "parent_of", v))
            else:
                nbrs.extend((t, "region", p.index) for t in redex.node_children(p))
            nbrs.extend((c, "child_of", v) for c in redex.node_children(v))
            for w, via, ref in nbrs:
                if w not in seen:
                    seen.add(w)
                    steps.append(_Step(w, via, ref))
                    queue.append(w)
    return steps


# -- matcher ----------------------------------------------------------------

def find_occurrences(agent: Bigraph, redex: Bigraph) -> List[Occurrence]:
    """All occurrences of ``redex`` in ``agent``, sorted by :meth:`Occurrence.key`."""
    if not agent.is_ground:
        raise NotGround("agent must have no sites and no inner names")
    check_solid(redex)

    plan = _plan(agent, redex)
    by_control: Dict[str, List[int]] = {}
    for n in sorted(agent.nodes):
        by_control.setdefault(agent.nodes[n].control, []).append(n)

    r_nodes = redex.nodes
    r_kids = {v: redex.node_children(v) for v in r_nodes}
    r_has_site = {v: bool(redex.site_children(v)) for v in r_nodes}
    a_kids = {n: agent.node_children(n) for n in agent.nodes}
    region_of = {v: redex.root_of(v).index for v in r_nodes}

    node_map: Dict[int, int] = {}
    used: Dict[int, int] = {}
    hosts: Dict[int, Parent] = {}
    edge_map: Dict[int, int] = {}
    edge_taken: Dict[int, int] = {}
    name_map: Dict[str, LinkTarget] = {}
    results: List[Occurrence] = []

    def candidates(step: _Step) -> List[int]:
        control = r_nodes[step.node].control
        if step.via == "anchor":
            return by_control.get(control, [])
        if step.via == "child_of":
            return agent.node_children(node_map[step.ref])
        if step.via == "parent_of":
            p = agent.parent[node_map[step.ref]]
            return [p] if isinstance(p, int) else []
        host = hosts.get(step.ref)
        if host is None:
            return by_control.get(control, [])
        return agent.node_children(host)

    def try_links(v: int, a: int) -> Optional[list]:
        undo = []
        ok = True
        for rt, at in zip(r_nodes[v].ports, agent.nodes[a].ports):
            if isinstance(rt, Edge):
                if not isinstance(at, Edge):
                    ok = False
                    break
                cur = edge_map.get(rt.id)
                if cur is None:
                    if at.id in edge_taken:
                        ok = False
                        break
                    edge_map[rt.id] = at.id
                    edge_taken[at.id] = rt.id
                    undo.append(("e", rt.id))
                elif cur != at.id:
                    ok = False
                    break
            else:
                cur = name_map.get(rt.name)
                if cur is None:
                    name_map[rt.name] = at
                    undo.append(("n", rt.name))
                elif cur != at:
                    ok = False
                    break
        if ok:
            return undo
        _undo_links(undo)
        return None

    def _undo_links(undo):
        for kind, key in undo:
            if kind == "e":
                del edge_taken[edge_map.pop(key)]
            else:
                del name_map[key]

    def fits(v: int, a: int) -> bool:
        rv, av = r_nodes[v], agent.nodes[a]
        if a in used or rv.control != av.control:
            return False
        if rv.label is not None and rv.label != av.label:
            return False
        n_have, n_want = len(a_kids[a]), len(r_kids[v])
        if n_have < n_want or (not r_has_site[v] and n_have != n_want):
            return False
        p = redex.parent[v]
        if isinstance(p, int):
            if p in node_map and agent.parent[a] != node_map[p]:
                return False
        else:
            host = hosts.get(p.index)
            if host is not None and agent.parent[a] != host:
                return False
        for c in r_kids[v]:
            if c in node_map and agent.parent[node_map[c]] != a:
                return False
        return True

    def search(k: int):
        if k == len(plan):
            occ = _complete()
            if occ is not None:
                results.append(occ)
            return
        step = plan[k]
        v = step.node
        for a in candidates(step):
            if not fits(v, a):
                continue
            undo = try_links(v, a)
            if undo is None:
                continue
            node_map[v] = a
            used[a] = v
            new_host = False
            if isinstance(redex.parent[v], Root) and region_of[v] not in hosts:
                hosts[region_of[v]] = agent.parent[a]
                new_host = True
            search(k + 1)
            if new_host:
                del hosts[region_of[v]]
            del used[a]
            del node_map[v]
            _undo_links(undo)

    def _complete() -> Optional[Occurrence]:
        image = set(used)
        region_parents = []
        for r in range(redex.interface.roots):
            host = hosts[r]
            if isinstance(host, int):
                if host in image or any(x in image for x in agent.ancestors(host)):
                    return None
            region_parents.append(host)
        for e, ae in edge_map.items():
            if len(agent.points[Edge(ae)]) != len(redex.points[Edge(e)]):
                return None
        site_fill = {}
        for v, a in node_map.items():
            for s in redex.site_children(v):
                want = {node_map[c] for c in r_kids[v]}
                site_fill[s.index] = tuple(c for c in a_kids[a] if c not in want)
        link_map: Dict[LinkTarget, LinkTarget] = {Edge(e): Edge(a) for e, a in edge_map.items()}
        link_map.update({Name(x): t for x, t in name_map.items()})
        return Occurrence(dict(node_map), site_fill, link_map, tuple(region_parents))

    search(0)
    results.sort(key=Occurrence.key)
    return results


def count_occurrences(agent: Bigraph, redex: Bigraph) -> int:
    return len(find_occurrences(agent, redex))
