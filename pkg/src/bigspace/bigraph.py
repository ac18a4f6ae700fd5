"""Immutable bigraph values.

A bigraph is a set of typed nodes carrying two independent structures:

* the place graph, a forest in which every node and every site has a parent
  that is either another node or a root (region);
* the link graph, a hypergraph whose points are node ports (and inner names)
  and whose links are closed edges or open outer names.

Node ids are plain integers, closed edges are integer ids in a separate
namespace.  Sites and roots are indexed from zero.  Nothing in here mutates a
bigraph after construction; every operation returns a new value.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from .errors import (
    InterfaceMismatch,
    NotPrime,
    SignatureConflict,
    UnknownName,
)

CONTROL_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Control:
    name: str
    arity: int = 0
    atomic: bool = False


@dataclass(frozen=True, order=True)
class Edge:
    id: int

    def __str__(self):
        return f"e{self.id}"


@dataclass(frozen=True, order=True)
class Name:
    name: str

    def __str__(self):
        return self.name


LinkTarget = Union[Edge, Name]


@dataclass(frozen=True, order=True)
class Site:
    index: int


@dataclass(frozen=True, order=True)
class Root:
    index: int


Place = Union[int, Site]      # something that has a parent
Parent = Union[int, Root]     # something that can be a parent


@dataclass(frozen=True)
class Node:
    id: int
    control: str
    ports: Tuple[LinkTarget, ...] = ()
    label: Optional[str] = None


@dataclass(frozen=True)
class Interface:
    sites: int = 0
    inner: frozenset = frozenset()
    roots: int = 1
    outer: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "inner", frozenset(self.inner))
        object.__setattr__(self, "outer", frozenset(self.outer))

    def __str__(self):
        inner = ",".join(sorted(self.inner))
        outer = ",".join(sorted(self.outer))
        return f"<{self.sites},{{{inner}}}> -> <{self.roots},{{{outer}}}>"


@dataclass(frozen=True)
class Violation:
    kind: str
    ref: object
    detail: str = ""

    def __str__(self):
        return f"{self.kind} ({self.ref}){': ' + self.detail if self.detail else ''}"


def link_key(link: LinkTarget):
    """Total order over links: edges first by id, then names alphabetically."""
    if isinstance(link, Edge):
        return (0, link.id, "")
    return (1, 0, link.name)


@dataclass(frozen=True, eq=False)
class Bigraph:
    signature: Mapping[str, Control]
    nodes: Mapping[int, Node]
    parent: Mapping[Place, Parent]
    interface: Interface = field(default_factory=Interface)
    edges: frozenset = frozenset()
    inner_links: Mapping[str, LinkTarget] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))

    # -- constructors -----------------------------------------------------

    @classmethod
    def empty(cls, signature: Mapping[str, Control] = None, roots: int = 1) -> "Bigraph":
        return cls(dict(signature or {}), {}, {}, Interface(roots=roots))

    @classmethod
    def ion(cls, control: Control, names: Iterable[str] = (), signature=None,
            label: Optional[str] = None) -> "Bigraph":
        """One node of ``control`` holding a single site, ports on ``names``."""
        names = tuple(names)
        sig = dict(signature or {})
        sig.setdefault(control.name, control)
        node = Node(0, control.name, tuple(Name(x) for x in names), label)
        parent = {0: Root(0)}
        sites = 0
        if not control.atomic:
            parent[Site(0)] = 0
            sites = 1
        return cls(sig, {0: node}, parent, Interface(sites=sites, roots=1, outer=frozenset(names)))

    @classmethod
    def identity(cls, roots: int = 1, names: Iterable[str] = (), signature=None) -> "Bigraph":
        names = frozenset(names)
        parent = {Site(i): Root(i) for i in range(roots)}
        return cls(dict(signature or {}), {}, parent,
                   Interface(sites=roots, inner=names, roots=roots, outer=names),
                   inner_links={x: Name(x) for x in names})

    # -- derived structure ------------------------------------------------

    @property
    def is_ground(self) -> bool:
        return self.interface.sites == 0 and not self.interface.inner

    @property
    def is_prime(self) -> bool:
        return self.interface.roots == 1 and not self.interface.inner

    @cached_property
    def children(self) -> Dict[Parent, List[Place]]:
        """Children of every node id and Root, in id order (sites last)."""
        out: Dict[Parent, List[Place]] = {Root(i): [] for i in range(self.interface.roots)}
        for n in self.nodes:
            out[n] = []
        for child, par in self.parent.items():
            out.setdefault(par, []).append(child)
        for kids in out.values():
            kids.sort(key=_place_key)
        return out

    def node_children(self, p: Parent) -> List[int]:
        return [c for c in self.children.get(p, ()) if not isinstance(c, Site)]

    def site_children(self, p: Parent) -> List[Site]:
        return [c for c in self.children.get(p, ()) if isinstance(c, Site)]

    def ancestors(self, place: Place) -> Iterator[int]:
        """Node ancestors of ``place``, nearest first (assumes a forest)."""
        p = self.parent.get(place)
        seen = set()
        while isinstance(p, int) and p not in seen:
            seen.add(p)
            yield p
            p = self.parent.get(p)

    def root_of(self, place: Place) -> Optional[Root]:
        p = self.parent.get(place)
        seen = set()
        while isinstance(p, int) and p not in seen:
            seen.add(p)
            p = self.parent.get(p)
        return p if isinstance(p, Root) else None

    def descendants(self, n: Parent, include_self: bool = True) -> List[int]:
        """Node descendants in preorder."""
        out = [n] if include_self and isinstance(n, int) else []
        stack = list(reversed(self.node_children(n)))
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.node_children(v)))
        return out

    @cached_property
    def points(self) -> Dict[LinkTarget, List[Tuple[int, int]]]:
        """Ports attached to each link, as (node id, port index) pairs.

        Every declared edge and outer name is present, possibly with no points.
        """
        out: Dict[LinkTarget, List[Tuple[int, int]]] = {Edge(e): [] for e in self.edges}
        for x in self.interface.outer:
            out[Name(x)] = []
        for nid in sorted(self.nodes):
            for i, link in enumerate(self.nodes[nid].ports):
                out.setdefault(link, []).append((nid, i))
        return out

    def links(self) -> List[LinkTarget]:
        return sorted(self.points, key=link_key)

    def fresh_node_id(self) -> int:
        return max(self.nodes, default=-1) + 1

    def fresh_edge_id(self) -> int:
        return max(self.edges, default=-1) + 1

    def label_of(self, n: int) -> Optional[str]:
        return self.nodes[n].label

    def control_of(self, n: int) -> Control:
        return self.signature[self.nodes[n].control]

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        order = canonical_order(self)
        return {
            "signature": [
                {"name": c.name, "arity": c.arity, "atomic": c.atomic}
                for c in sorted(self.signature.values(), key=lambda c: c.name)
            ],
            "nodes": [
                {
                    "id": n,
                    "control": self.nodes[n].control,
                    "label": self.nodes[n].label,
                    "ports": [_link_json(link) for link in self.nodes[n].ports],
                }
                for n in order
            ],
            "parents": {_place_json(k): _parent_json(v) for k, v in self.parent.items()},
            "interface": {
                "sites": self.interface.sites,
                "inner": sorted(self.interface.inner),
                "roots": self.interface.roots,
                "outer": sorted(self.interface.outer),
            },
            "edges": sorted(self.edges),
            "inner_links": {x: _link_json(t) for x, t in self.inner_links.items()},
        }

    def canonical_bytes(self) -> bytes:
        return canonical_dumps(self.to_json()).encode("utf-8")

    def canonical_hash(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()

    @classmethod
    def from_json(cls, doc: dict) -> "Bigraph":
        sig = {c["name"]: Control(c["name"], c["arity"], c.get("atomic", False))
               for c in doc["signature"]}
        nodes = {}
        for n in doc["nodes"]:
            ports = tuple(_link_from_json(p) for p in n["ports"])
            nodes[n["id"]] = Node(n["id"], n["control"], ports, n.get("label"))
        parent = {_place_from_json(k): _parent_from_json(v) for k, v in doc["parents"].items()}
        itf = doc["interface"]
        interface = Interface(itf["sites"], frozenset(itf["inner"]), itf["roots"], frozenset(itf["outer"]))
        inner_links = {x: _link_from_json(t) for x, t in doc.get("inner_links", {}).items()}
        return cls(sig, nodes, parent, interface, frozenset(doc["edges"]), inner_links)

    def __repr__(self):
        return f"<Bigraph {len(self.nodes)} nodes, {len(self.edges)} edges, {self.interface}>"


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _place_key(p):
    return (1, p.index) if isinstance(p, Site) else (0, p)


def _place_json(p: Place) -> str:
    return f"s{p.index}" if isinstance(p, Site) else f"n{p}"


def _parent_json(p: Parent) -> str:
    return f"r{p.index}" if isinstance(p, Root) else f"n{p}"


def _place_from_json(s: str) -> Place:
    return Site(int(s[1:])) if s[0] == "s" else int(s[1:])


def _parent_from_json(s: str) -> Parent:
    return Root(int(s[1:])) if s[0] == "r" else int(s[1:])


def _link_json(link: LinkTarget) -> dict:
    return {"edge": link.id} if isinstance(link, Edge) else {"name": link.name}


def _link_from_json(d: dict) -> LinkTarget:
    return Edge(d["edge"]) if "edge" in d else Name(d["name"])


# -- canonical forms -----------------------------------------------------

def subtree_hashes(b: Bigraph) -> Dict[Place, str]:
    """Structural hash of every node's subtree, invariant under renumbering.

    Closed edges are anonymous in the hash; outer names and site indices are
    not.  Only used for ordering and pruning, never for equality on its own.
    """
    memo: Dict[Place, str] = {}

    def visit(p: Place) -> str:
        if p in memo:
            return memo[p]
        if isinstance(p, Site):
            h = f"site:{p.index}"
        else:
            node = b.nodes[p]
            ports = ",".join("-" if isinstance(t, Edge) else "name:" + t.name for t in node.ports)
            kids = sorted(visit(c) for c in b.children.get(p, ()))
            raw = f"{node.control}|{node.label}|{ports}|" + ";".join(kids)
            h = hashlib.sha256(raw.encode("utf-8")).hexdigest()[:24]
        memo[p] = h
        return h

    for p in list(b.nodes) + [s for s in b.parent if isinstance(s, Site)]:
        visit(p)
    return memo


def canonical_order(b: Bigraph) -> List[int]:
    """Node ids in depth-first order, siblings sorted by (subtree hash, id)."""
    try:
        hashes = subtree_hashes(b)
    except RecursionError:
        return sorted(b.nodes)
    out: List[int] = []
    seen = set()

    def visit(p: Parent):
        kids = sorted(b.node_children(p), key=lambda c: (hashes[c], c))
        for c in kids:
            if c in seen:
                continue
            seen.add(c)
            out.append(c)
            visit(c)

    for r in range(b.interface.roots):
        visit(Root(r))
    # nodes unreachable from a root (invalid bigraphs) still get listed
    out.extend(n for n in sorted(b.nodes) if n not in seen)
    return out


# -- validation ----------------------------------------------------------

def validate(b: Bigraph) -> List[Violation]:
    out: List[Violation] = []
    itf = b.interface
    if itf.sites < 0 or itf.roots < 0:
        out.append(Violation("bad interface", str(itf), "negative count"))
    for name, ctrl in b.signature.items():
        if name != ctrl.name or not CONTROL_RE.match(name):
            out.append(Violation("bad control name", name))
        if ctrl.arity < 0:
            out.append(Violation("bad arity", name))

    links = {Edge(e) for e in b.edges} | {Name(x) for x in itf.outer}
    for nid, node in sorted(b.nodes.items()):
        if nid != node.id:
            out.append(Violation("id mismatch", nid))
        ctrl = b.signature.get(node.control)
        if ctrl is None:
            out.append(Violation("unknown control", nid, node.control))
            continue
        if len(node.ports) != ctrl.arity:
            out.append(Violation("arity mismatch", nid, f"{len(node.ports)} ports, arity {ctrl.arity}"))
        for i, t in enumerate(node.ports):
            if t not in links:
                out.append(Violation("dangling link", nid, f"port {i} -> {t}"))
        if ctrl.atomic and b.children.get(nid):
            out.append(Violation("atomic has children", nid))

    for x in sorted(itf.inner):
        t = b.inner_links.get(x)
        if t is None:
            out.append(Violation("unlinked inner name", x))
        elif t not in links:
            out.append(Violation("dangling link", x, f"inner name -> {t}"))
    for x in sorted(set(b.inner_links) - itf.inner):
        out.append(Violation("unknown inner name", x))

    expected = set(b.nodes) | {Site(i) for i in range(itf.sites)}
    for place in sorted(expected, key=_place_key):
        if place not in b.parent:
            out.append(Violation("missing parent", place))
    for place, par in b.parent.items():
        if place not in expected:
            out.append(Violation("unknown place", place))
        if isinstance(par, Root):
            if not 0 <= par.index < itf.roots:
                out.append(Violation("unknown root", place, str(par)))
        elif par not in b.nodes:
            out.append(Violation("unknown parent", place, str(par)))

    for place in sorted(b.parent, key=_place_key):
        seen = {place}
        p = b.parent.get(place)
        while isinstance(p, int) and p in b.nodes:
            if p in seen:
                out.append(Violation("not a forest", place, "parent cycle"))
                break
            seen.add(p)
            p = b.parent.get(p)
    return out


def is_valid(b: Bigraph) -> bool:
    return not validate(b)


# -- renaming ------------------------------------------------------------

def renumber(b: Bigraph, node_map: Mapping[int, int] = None,
             edge_map: Mapping[int, int] = None) -> Bigraph:
    """Rename node and edge ids; unmapped ids are kept."""
    node_map = dict(node_map or {})
    edge_map = dict(edge_map or {})
    nm = lambda n: node_map.get(n, n)

    def lm(t):
        return Edge(edge_map.get(t.id, t.id)) if isinstance(t, Edge) else t

    nodes = {nm(n): Node(nm(n), v.control, tuple(lm(t) for t in v.ports), v.label)
             for n, v in b.nodes.items()}
    parent = {(nm(k) if isinstance(k, int) else k): (nm(v) if isinstance(v, int) else v)
              for k, v in b.parent.items()}
    return Bigraph(b.signature, nodes, parent, b.interface,
                   frozenset(edge_map.get(e, e) for e in b.edges),
                   {x: lm(t) for x, t in b.inner_links.items()})


def compact(b: Bigraph, node_start: int = 0, edge_start: int = 0) -> Bigraph:
    """Renumber nodes and edges consecutively, preserving relative order."""
    nmap = {n: node_start + i for i, n in enumerate(sorted(b.nodes))}
    emap = {e: edge_start + i for i, e in enumerate(sorted(b.edges))}
    return renumber(b, nmap, emap)


def merge_signatures(*sigs: Mapping[str, Control]) -> Dict[str, Control]:
    out: Dict[str, Control] = {}
    for sig in sigs:
        for name, c in sig.items():
            prev = out.get(name)
            if prev is not None and prev != c:
                raise SignatureConflict(name, ((prev.arity, prev.atomic), (c.arity, c.atomic)))
            out[name] = c
    return out


# -- composition ---------------------------------------------------------

def compose(outer: Bigraph, inner: Bigraph) -> Bigraph:
    """Plug ``inner``'s roots into ``outer``'s sites and fuse shared names."""
    if inner.interface.roots != outer.interface.sites:
        raise InterfaceMismatch(outer.interface.sites, inner.interface.roots, "site/root count")
    if inner.interface.outer != outer.interface.inner:
        raise InterfaceMismatch(sorted(outer.interface.inner), sorted(inner.interface.outer), "names")
    sig = merge_signatures(outer.signature, inner.signature)
    f = compact(outer)
    g = compact(inner, node_start=len(f.nodes), edge_start=len(f.edges))

    def through(t: LinkTarget) -> LinkTarget:
        return f.inner_links[t.name] if isinstance(t, Name) else t

    nodes = dict(f.nodes)
    for n, v in g.nodes.items():
        nodes[n] = Node(n, v.control, tuple(through(t) for t in v.ports), v.label)

    parent: Dict[Place, Parent] = {k: v for k, v in f.parent.items() if not isinstance(k, Site)}
    for k, v in g.parent.items():
        parent[k] = f.parent[Site(v.index)] if isinstance(v, Root) else v

    return Bigraph(
        sig, nodes, parent,
        Interface(inner.interface.sites, inner.interface.inner,
                  outer.interface.roots, outer.interface.outer),
        f.edges | g.edges,
        {x: through(t) for x, t in g.inner_links.items()},
    )


def juxtapose(a: Bigraph, b: Bigraph) -> Bigraph:
    """Parallel product: regions and sites side by side, shared outer names fused."""
    sig = merge_signatures(a.signature, b.signature)
    shared_inner = a.interface.inner & b.interface.inner
    if shared_inner:
        raise InterfaceMismatch("disjoint inner names", sorted(shared_inner), "inner names")
    f = compact(a)
    g = compact(b, node_start=len(f.nodes), edge_start=len(f.edges))
    ra, sa = a.interface.roots, a.interface.sites

    parent = dict(f.parent)
    for k, v in g.parent.items():
        k = Site(k.index + sa) if isinstance(k, Site) else k
        v = Root(v.index + ra) if isinstance(v, Root) else v
        parent[k] = v
    nodes = dict(f.nodes)
    nodes.update(g.nodes)
    inner_links = dict(f.inner_links)
    inner_links.update(g.inner_links)
    return Bigraph(
        sig, nodes, parent,
        Interface(sa + b.interface.sites, a.interface.inner | b.interface.inner,
                  ra + b.interface.roots, a.interface.outer | b.interface.outer),
        f.edges | g.edges,
        inner_links,
    )


def juxtapose_all(parts: Iterable[Bigraph], signature=None) -> Bigraph:
    out = None
    for p in parts:
        out = p if out is None else juxtapose(out, p)
    if out is None:
        return Bigraph.empty(signature, roots=0)
    return out


def merge(b: Bigraph) -> Bigraph:
    """Collapse all regions into a single root."""
    parent = {k: (Root(0) if isinstance(v, Root) else v) for k, v in b.parent.items()}
    return replace(b, parent=parent, interface=replace(b.interface, roots=1))


def merge_all(parts: List[Bigraph], signature=None) -> Bigraph:
    if not parts:
        return Bigraph.empty(signature)
    return merge(juxtapose_all(parts))


def merge_under(parent_expr: Bigraph, children: List[Bigraph]) -> Bigraph:
    """Place the merged contents of prime ``children`` into ``parent_expr``'s hole.

    ``parent_expr`` must have exactly one site.  Outer names of the parent and
    of the children are fused by name; the result's sites are the children's
    sites, in child order.
    """
    for i, c in enumerate(children):
        if c.interface.roots != 1:
            raise NotPrime(f"child {i} has {c.interface.roots} roots")
    if parent_expr.interface.sites != 1:
        raise NotPrime(f"parent expression has {parent_expr.interface.sites} sites, needs 1")
    sig = merge_signatures(parent_expr.signature, *(c.signature for c in children))
    body = merge_all(list(children), sig) if children else Bigraph.empty(sig)
    names = sorted(body.interface.outer)
    # widen the parent with an identity on the children's names so compose can fuse them
    shared = parent_expr.interface.outer & frozenset(names)
    hole = Bigraph.identity(1, names, sig)
    outer = _fuse_inner(parent_expr, hole, shared)
    return compose(outer, _with_signature(body, sig))


def _with_signature(b: Bigraph, sig) -> Bigraph:
    return replace(b, signature=dict(sig))


def _fuse_inner(parent_expr: Bigraph, hole: Bigraph, shared) -> Bigraph:
    """``parent_expr`` with inner names equal to ``hole``'s, linked so that
    names shared with the parent's outer face land on the same link."""
    names = hole.interface.inner
    inner_links = {x: Name(x) for x in names}
    return Bigraph(
        merge_signatures(parent_expr.signature, hole.signature),
        dict(parent_expr.nodes),
        dict(parent_expr.parent),
        Interface(parent_expr.interface.sites, names, parent_expr.interface.roots,
                  parent_expr.interface.outer | names),
        parent_expr.edges,
        inner_links,
    )


def close_name(b: Bigraph, x: str) -> Bigraph:
    """Close outer name ``x`` into a fresh edge (idle if nothing uses it)."""
    if x not in b.interface.outer:
        raise UnknownName(x)
    e = Edge(b.fresh_edge_id())
    sub = lambda t: e if t == Name(x) else t
    nodes = {n: replace(v, ports=tuple(sub(t) for t in v.ports)) for n, v in b.nodes.items()}
    return Bigraph(
        b.signature, nodes, dict(b.parent),
        replace(b.interface, outer=b.interface.outer - {x}),
        b.edges | {e.id},
        {y: sub(t) for y, t in b.inner_links.items()},
    )


def rename_outer(b: Bigraph, mapping: Mapping[str, str]) -> Bigraph:
    """Rename outer names; two names mapped to the same target are fused."""
    sub = lambda t: Name(mapping.get(t.name, t.name)) if isinstance(t, Name) else t
    nodes = {n: replace(v, ports=tuple(sub(t) for t in v.ports)) for n, v in b.nodes.items()}
    outer = frozenset(mapping.get(x, x) for x in b.interface.outer)
    return Bigraph(b.signature, nodes, dict(b.parent), replace(b.interface, outer=outer),
                   b.edges, {y: sub(t) for y, t in b.inner_links.items()})


def open_link_count(b: Bigraph) -> int:
    return len(b.interface.outer)


def closed_edge_count(b: Bigraph) -> int:
    return len(b.edges)
