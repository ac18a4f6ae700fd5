"""Place graphs from building scans, spatial names, and scoped views.

A scan document is a JSON tree of places (building, floor, room, zone, ...)
each listing the devices it contains.  Devices that name the same link group
end up on one closed edge.  Names are read leaf-first up the containment
chain, e.g. ``projector.room-a.floor-1.building-1``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .bigraph import (
    Bigraph,
    Control,
    Edge,
    Interface,
    LinkTarget,
    Name,
    Node,
    Root,
    link_key,
)
from .errors import (
    Ambiguous,
    ArityMismatch,
    AtomicScope,
    DuplicateSiblingLabel,
    InvalidLabel,
    MissingLabel,
    NotFound,
    ScopeMissing,
    UnknownBoundaryName,
    UnknownCategory,
)

SEGMENT_RE = re.compile(r"[a-z0-9-]+\Z")

DEFAULT_CATEGORIES = {
    "building": "Building",
    "floor": "Floor",
    "room": "Room",
    "zone": "Zone",
}


def normalize_label(label: str) -> str:
    out = "-".join(label.strip().lower().split())
    if not SEGMENT_RE.match(out):
        raise InvalidLabel(f"label {label!r} does not normalize to [a-z0-9-]+")
    return out


# -- scan documents -----------------------------------------------------------

@dataclass(frozen=True)
class ScanDevice:
    label: str
    control: str
    links: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ScanPlace:
    label: str
    category: str
    devices: Tuple[ScanDevice, ...] = ()
    children: Tuple["ScanPlace", ...] = ()

    @classmethod
    def from_json(cls, d: dict) -> "ScanPlace":
        devices = tuple(
            ScanDevice(x["label"], x["control"], tuple(x.get("links", ())))
            for x in d.get("devices", ())
        )
        children = tuple(cls.from_json(c) for c in d.get("children", ()))
        return cls(d["label"], d["category"], devices, children)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "category": self.category,
            "devices": [{"label": x.label, "control": x.control, "links": list(x.links)}
                        for x in self.devices],
            "children": [c.to_json() for c in self.children],
        }


@dataclass(frozen=True)
class ScanDocument:
    places: Tuple[ScanPlace, ...] = ()
    categories: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_CATEGORIES))

    @classmethod
    def from_json(cls, doc: Union[dict, list]) -> "ScanDocument":
        """Accepts a single place tree, a list of trees, or
        ``{"categories": {...}, "places": [...]}``."""
        categories = dict(DEFAULT_CATEGORIES)
        if isinstance(doc, list):
            trees = doc
        elif "places" in doc:
            trees = doc["places"]
            categories.update(doc.get("categories", {}))
        else:
            trees = [doc]
        return cls(tuple(ScanPlace.from_json(t) for t in trees), categories)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ScanDocument":
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_json(self) -> dict:
        return {"categories": dict(sorted(self.categories.items())),
                "places": [p.to_json() for p in self.places]}


def scan_signature(doc: ScanDocument) -> Dict[str, Control]:
    """Controls implied by a scan when no program supplies them.

    Place controls get arity 0; device controls are atomic with the arity of
    their first occurrence.
    """
    sig: Dict[str, Control] = {}
    for ctrl in doc.categories.values():
        sig[ctrl] = Control(ctrl, 0, False)

    def walk(p: ScanPlace):
        for d in p.devices:
            sig.setdefault(d.control, Control(d.control, len(d.links), True))
        for c in p.children:
            walk(c)

    for p in doc.places:
        walk(p)
    return sig


def ingest_scan(doc: ScanDocument, signature: Optional[Mapping[str, Control]] = None) -> Bigraph:
    """One node per place and per device, under a single root."""
    sig = dict(signature) if signature is not None else scan_signature(doc)
    nodes: Dict[int, Node] = {}
    parent = {}
    groups: Dict[str, int] = {}

    def check_siblings(labels: List[str], where: str):
        seen = set()
        for label in labels:
            if label in seen:
                raise DuplicateSiblingLabel(f"{where}: two children labelled {label!r}")
            seen.add(label)

    def add(place: ScanPlace, under, where: str):
        ctrl_name = doc.categories.get(place.category)
        if ctrl_name is None or ctrl_name not in sig:
            raise UnknownCategory(f"{where}: category {place.category!r} has no declared control")
        n = len(nodes)
        label = normalize_label(place.label)
        nodes[n] = Node(n, ctrl_name, (), label)
        parent[n] = under
        here = f"{label}.{where}" if where != "/" else label
        check_siblings([normalize_label(d.label) for d in place.devices]
                       + [normalize_label(c.label) for c in place.children], here)
        for dev in place.devices:
            ctrl = sig.get(dev.control)
            if ctrl is None:
                raise UnknownCategory(f"{here}: device control {dev.control!r} is not declared")
            if len(dev.links) != ctrl.arity:
                raise ArityMismatch(f"{here}: device {dev.label} has {len(dev.links)} links, "
                                    f"{dev.control} has arity {ctrl.arity}")
            ports = tuple(Edge(groups.setdefault(g, len(groups))) for g in dev.links)
            d = len(nodes)
            nodes[d] = Node(d, dev.control, ports, normalize_label(dev.label))
            parent[d] = n
        for child in place.children:
            add(child, n, here)

    check_siblings([normalize_label(p.label) for p in doc.places], "/")
    for p in doc.places:
        add(p, Root(0), "/")
    return Bigraph(sig, nodes, parent, Interface(roots=1), frozenset(groups.values()))


# -- names ----------------------------------------------------------------------

@dataclass(frozen=True)
class SpatialName:
    segments: Tuple[str, ...]     # leaf first

    def __post_init__(self):
        if not self.segments:
            raise InvalidLabel("a spatial name needs at least one segment")
        for s in self.segments:
            if not SEGMENT_RE.match(s):
                raise InvalidLabel(f"bad name segment {s!r}")

    @classmethod
    def parse(cls, text: Union[str, "SpatialName"]) -> "SpatialName":
        if isinstance(text, SpatialName):
            return text
        return cls(tuple(text.split(".")))

    def within(self, other: "SpatialName") -> bool:
        """True if this name lies at or below ``other`` in the containment chain."""
        k = len(other.segments)
        return len(self.segments) >= k and self.segments[-k:] == other.segments

    def __str__(self):
        return ".".join(self.segments)


def spatial_name(b: Bigraph, node: int) -> SpatialName:
    if node not in b.nodes:
        raise NotFound(f"no node {node}")
    chain = [node] + list(b.ancestors(node))
    labels = []
    for n in chain:
        label = b.nodes[n].label
        if label is None:
            raise MissingLabel(n)
        labels.append(label)
    return SpatialName(tuple(labels))


def resolve(b: Bigraph, name: Union[str, SpatialName]) -> int:
    name = SpatialName.parse(name)
    frontier = [c for r in range(b.interface.roots) for c in b.node_children(Root(r))]
    found: List[int] = []
    for depth, seg in enumerate(reversed(name.segments)):
        found = [n for n in frontier if b.nodes[n].label == seg]
        if not found:
            raise NotFound(f"{name}: nothing labelled {seg!r} at depth {depth}")
        frontier = [c for n in found for c in b.node_children(n)]
    if len(found) > 1:
        raise Ambiguous(f"{name} matches nodes {sorted(found)}")
    return found[0]


def name_table(b: Bigraph) -> List[Tuple[str, int]]:
    """(name, node id) for every node whose whole ancestor chain is labelled."""
    out = []
    for n in b.nodes:
        try:
            out.append((str(spatial_name(b, n)), n))
        except MissingLabel:
            continue
    return sorted(out)


# -- scoped views ---------------------------------------------------------------

@dataclass(frozen=True)
class ScopedView:
    view: Bigraph
    boundary: Mapping[str, LinkTarget]
    origin: int


def _subtree(b: Bigraph, place: int) -> List[int]:
    return b.descendants(place)


def extract_scope(b: Bigraph, place: int) -> ScopedView:
    """The subtree rooted at ``place`` as a ground prime bigraph.

    Node and edge ids are kept.  Links with points outside the subtree, and
    agent outer names, become outer names ``bnd-0``, ``bnd-1``, ... ordered by
    the original link.
    """
    if place not in b.nodes:
        raise ScopeMissing(f"no node {place}")
    if b.control_of(place).atomic:
        raise AtomicScope(f"node {place} ({b.nodes[place].control}) is atomic")
    inside = _subtree(b, place)
    inside_set = set(inside)

    crossing: List[LinkTarget] = []
    interior: List[int] = []
    used = {t for n in inside for t in b.nodes[n].ports}
    for link in sorted(used, key=link_key):
        pts = b.points[link]
        if isinstance(link, Name) or any(n not in inside_set for n, _ in pts):
            crossing.append(link)
        else:
            interior.append(link.id)
    boundary = {f"bnd-{k}": link for k, link in enumerate(crossing)}
    rename = {link: Name(x) for x, link in boundary.items()}

    nodes = {}
    parent = {}
    for n in inside:
        old = b.nodes[n]
        nodes[n] = Node(n, old.control, tuple(rename.get(t, t) for t in old.ports), old.label)
        parent[n] = Root(0) if n == place else b.parent[n]
    view = Bigraph(b.signature, nodes, parent, Interface(roots=1, outer=frozenset(boundary)),
                   frozenset(interior))
    return ScopedView(view, boundary, place)


def reattach(b: Bigraph, scoped: ScopedView) -> Bigraph:
    """Put a (possibly rewritten) scoped view back where it came from."""
    origin = scoped.origin
    if origin not in b.nodes:
        raise ScopeMissing(f"scope node {origin} is no longer in the bigraph")
    view = scoped.view
    known = b.points
    for x in sorted(view.interface.outer):
        target = scoped.boundary.get(x)
        if target is None:
            raise UnknownBoundaryName(f"{x} is not a boundary name of this scope")
        if target not in known:
            raise UnknownBoundaryName(f"{x} refers to {target}, which is not a link of the bigraph")

    old_inside = set(_subtree(b, origin))
    host = b.parent[origin]
    outside_ids = set(b.nodes) - old_inside

    # view ids that collide with nodes outside the scope are renumbered
    next_node = max(set(b.nodes) | set(view.nodes), default=-1) + 1
    nmap: Dict[int, int] = {}
    for n in sorted(view.nodes):
        if n in outside_ids:
            nmap[n] = next_node
            next_node += 1
        else:
            nmap[n] = n

    interior_old = {e for e in b.edges
                    if b.points[Edge(e)] and all(n in old_inside for n, _ in b.points[Edge(e)])}
    next_edge = max(set(b.edges) | set(view.edges), default=-1) + 1
    emap: Dict[int, int] = {}
    for e in sorted(view.edges):
        if e in interior_old or e not in b.edges:
            emap[e] = e
        else:
            emap[e] = next_edge
            next_edge += 1

    def relink(t: LinkTarget) -> LinkTarget:
        if isinstance(t, Name):
            return scoped.boundary[t.name]
        return Edge(emap[t.id])

    nodes = {n: v for n, v in b.nodes.items() if n not in old_inside}
    parent = {k: v for k, v in b.parent.items() if k not in old_inside}
    for n, v in view.nodes.items():
        m = nmap[n]
        nodes[m] = Node(m, v.control, tuple(relink(t) for t in v.ports), v.label)
        p = view.parent[n]
        parent[m] = host if isinstance(p, Root) else nmap[p]
    edges = (set(b.edges) - interior_old) | set(emap.values())
    return Bigraph(b.signature, nodes, parent, b.interface, frozenset(edges), dict(b.inner_links))


def insert_node(b: Bigraph, under: Optional[int], control: str, label: Optional[str] = None,
                ports: Tuple[LinkTarget, ...] = None) -> Tuple[Bigraph, int]:
    """Add one node below ``under`` (None: the first root).

    Without explicit ``ports`` every port gets its own fresh closed edge.
    """
    ctrl = b.signature.get(control)
    if ctrl is None:
        raise UnknownCategory(f"control {control!r} is not declared")
    if under is not None:
        if under not in b.nodes:
            raise NotFound(f"no node {under}")
        if b.control_of(under).atomic:
            raise AtomicScope(f"cannot insert into atomic node {under}")
    edges = set(b.edges)
    if ports is None:
        first = b.fresh_edge_id()
        ports = tuple(Edge(first + i) for i in range(ctrl.arity))
        edges.update(e.id for e in ports)
    if len(ports) != ctrl.arity:
        raise ArityMismatch(f"{control} has arity {ctrl.arity}, given {len(ports)} ports")
    if label is not None:
        label = normalize_label(label)
        siblings = b.node_children(Root(0) if under is None else under)
        if any(b.nodes[c].label == label for c in siblings):
            raise DuplicateSiblingLabel(f"a sibling is already labelled {label!r}")
    n = b.fresh_node_id()
    nodes = dict(b.nodes)
    nodes[n] = Node(n, control, tuple(ports), label)
    parent = dict(b.parent)
    parent[n] = Root(0) if under is None else under
    return Bigraph(b.signature, nodes, parent, b.interface, frozenset(edges), dict(b.inner_links)), n


def remove_subtree(b: Bigraph, node: int) -> Bigraph:
    """Delete ``node`` and everything below it; links it used stay declared."""
    if node not in b.nodes:
        raise NotFound(f"no node {node}")
    gone = set(b.descendants(node))
    nodes = {n: v for n, v in b.nodes.items() if n not in gone}
    parent = {k: v for k, v in b.parent.items() if k not in gone}
    return Bigraph(b.signature, nodes, parent, b.interface, b.edges, dict(b.inner_links))


def place_of(b: Bigraph, name: Union[str, SpatialName, None]) -> Optional[int]:
    """Node id for a spatial name; None stands for the whole bigraph."""
    if name is None or name == "":
        return None
    return resolve(b, name)


def scope_nodes(b: Bigraph, place: Optional[int]) -> List[int]:
    if place is None:
        return sorted(b.nodes)
    return sorted(_subtree(b, place))


def load_scan(path: Union[str, Path], signature: Optional[Mapping[str, Control]] = None) -> Bigraph:
    return ingest_scan(ScanDocument.load(path), signature)


__all__ = [
    "ScanDevice", "ScanPlace", "ScanDocument", "SpatialName", "ScopedView",
    "ingest_scan", "scan_signature", "spatial_name", "resolve", "name_table",
    "extract_scope", "reattach", "normalize_label", "place_of", "scope_nodes",
    "load_scan", "insert_node", "remove_subtree",
]
