"""Bigraph equality up to renaming of node and edge ids."""
from __future__ import annotations

from collections import Counter
from typing import Dict, List, Optional

from .bigraph import Bigraph, Edge, Root, Site, subtree_hashes


def iso_eq(a: Bigraph, b: Bigraph) -> bool:
    """True iff some bijection of nodes and edges maps ``a`` onto ``b``.

    Controls, labels, parents and link structure must be preserved exactly;
    site and root indices and names (inner and outer) are fixed.
    """
    if a.interface != b.interface:
        return False
    if dict(a.signature) != dict(b.signature):
        return False
    if len(a.nodes) != len(b.nodes) or len(a.edges) != len(b.edges):
        return False
    for b_ in (a, b):
        if set(b_.parent) != set(b_.nodes) | {Site(i) for i in range(b_.interface.sites)}:
            return False
    try:
        ha, hb = subtree_hashes(a), subtree_hashes(b)
    except RecursionError:
        return False
    if Counter(ha[n] for n in a.nodes) != Counter(hb[n] for n in b.nodes):
        return False
    for r in range(a.interface.roots):
        ka = Counter(ha[c] for c in a.children.get(Root(r), ()))
        kb = Counter(hb[c] for c in b.children.get(Root(r), ()))
        if ka != kb:
            return False
    for i in range(a.interface.sites):
        if isinstance(a.parent[Site(i)], Root) != isinstance(b.parent[Site(i)], Root):
            return False
        if isinstance(a.parent[Site(i)], Root) and a.parent[Site(i)] != b.parent[Site(i)]:
            return False

    # parents before children
    order: List[int] = []
    for r in range(a.interface.roots):
        order.extend(a.descendants(Root(r)))
    if len(order) != len(a.nodes):
        return False

    node_map: Dict[int, int] = {}
    used = set()
    edge_map: Dict[int, int] = {}
    edge_inv: Dict[int, int] = {}

    def bind_ports(v: int, w: int) -> Optional[List[int]]:
        """Extend the edge map for v -> w; returns newly bound edges or None."""
        added = []
        for ta, tb in zip(a.nodes[v].ports, b.nodes[w].ports):
            if isinstance(ta, Edge) != isinstance(tb, Edge):
                break
            if not isinstance(ta, Edge):
                if ta != tb:
                    break
                continue
            cur = edge_map.get(ta.id)
            if cur is None:
                if tb.id in edge_inv:
                    break
                edge_map[ta.id] = tb.id
                edge_inv[tb.id] = ta.id
                added.append(ta.id)
            elif cur != tb.id:
                break
        else:
            return added
        for e in added:
            del edge_inv[edge_map.pop(e)]
        return None

    def search(k: int) -> bool:
        if k == len(order):
            return _finish(a, b, edge_map)
        v = order[k]
        pa = a.parent[v]
        host = pa if isinstance(pa, Root) else node_map[pa]
        for w in b.node_children(host):
            if w in used or hb[w] != ha[v]:
                continue
            va, vb = a.nodes[v], b.nodes[w]
            if va.control != vb.control or va.label != vb.label or len(va.ports) != len(vb.ports):
                continue
            added = bind_ports(v, w)
            if added is None:
                continue
            node_map[v] = w
            used.add(w)
            if search(k + 1):
                return True
            used.discard(w)
            del node_map[v]
            for e in added:
                del edge_inv[edge_map.pop(e)]
        return False

    return search(0)


def _finish(a: Bigraph, b: Bigraph, edge_map: Dict[int, int]) -> bool:
    emap = dict(edge_map)
    inv = {v: k for k, v in emap.items()}
    for x in sorted(a.inner_links):
        ta, tb = a.inner_links[x], b.inner_links.get(x)
        if isinstance(ta, Edge) != isinstance(tb, Edge):
            return False
        if not isinstance(ta, Edge):
            if ta != tb:
                return False
            continue
        if ta.id in emap:
            if emap[ta.id] != tb.id:
                return False
        elif tb.id in inv:
            return False
        else:
            emap[ta.id] = tb.id
            inv[tb.id] = ta.id
    # edges left unmapped are idle on both sides; only their number matters
    return len(a.edges) - len(emap) == len(b.edges) - len(inv)
