import json

import pytest

from bigspace import iso_eq, validate
from bigspace.errors import (
    AtomicScope,
    ArityMismatch,
    DuplicateSiblingLabel,
    MissingLabel,
    NotFound,
    ScopeMissing,
    UnknownBoundaryName,
    UnknownCategory,
)
from bigspace.matching import find_occurrences
from bigspace.rewriting import apply
from bigspace.spatial import (
    ScanDocument,
    ScopedView,
    SpatialName,
    extract_scope,
    ingest_scan,
    insert_node,
    load_scan,
    name_table,
    reattach,
    remove_subtree,
    resolve,
    spatial_name,
)

from conftest import FIXTURES

PROJECTOR = "projector.room-a.floor-1.building-1"


@pytest.fixture
def office():
    return load_scan(FIXTURES / "office_scan.json")


def scan(tree):
    return ingest_scan(ScanDocument.from_json(tree))


# -- ingest ---------------------------------------------------------------------

def test_four_level_chain():
    b = scan({"label": "building-1", "category": "building", "children": [
        {"label": "floor-1", "category": "floor", "children": [
            {"label": "room-a", "category": "room",
             "devices": [{"label": "projector", "control": "Projector"}]}]}]})
    assert len(b.nodes) == 4
    chain, n = [], resolve(b, PROJECTOR)
    while isinstance(n, int):
        chain.append(b.nodes[n].label)
        n = b.parent[n]
    assert chain == ["projector", "room-a", "floor-1", "building-1"]


def test_lone_building():
    b = load_scan(FIXTURES / "empty_building.json")
    assert len(b.nodes) == 1 and validate(b) == []


def test_shared_link_group_is_one_edge():
    b = scan({"label": "r", "category": "room", "devices": [
        {"label": "a", "control": "Ap", "links": ["wifi-0"]},
        {"label": "b", "control": "Ap", "links": ["wifi-0"]}]})
    assert len(b.edges) == 1
    assert len(b.points[b.nodes[resolve(b, "a.r")].ports[0]]) == 2


def test_ingest_errors():
    with pytest.raises(UnknownCategory):
        load_scan(FIXTURES / "bad_category.json")
    with pytest.raises(DuplicateSiblingLabel):
        scan({"label": "r", "category": "room", "devices": [
            {"label": "lamp", "control": "Lamp"}, {"label": "Lamp", "control": "Lamp"}]})
    sig = scan({"label": "r", "category": "room",
                "devices": [{"label": "n", "control": "Node", "links": ["x"]}]}).signature
    with pytest.raises(ArityMismatch):
        ingest_scan(ScanDocument.from_json({"label": "r", "category": "room", "devices": [
            {"label": "n", "control": "Node", "links": []}]}), sig)


def test_ingest_is_deterministic():
    doc = ScanDocument.load(FIXTURES / "office_scan.json")
    assert ingest_scan(doc).canonical_bytes() == ingest_scan(doc).canonical_bytes()


def test_labels_normalize():
    b = scan({"label": "Building 1", "category": "building"})
    assert [v.label for v in b.nodes.values()] == ["building-1"]


# -- names ----------------------------------------------------------------------

def test_projector_name(office):
    n = resolve(office, PROJECTOR)
    assert str(spatial_name(office, n)) == PROJECTOR
    assert office.nodes[n].control == "Projector"


def test_top_level_name(office):
    (top,) = office.node_children(office.parent[resolve(office, "building-1")])
    assert str(spatial_name(office, top)) == "building-1"


def test_unlabelled_node_has_no_name(office):
    b, n = insert_node(office, resolve(office, "room-b.floor-1.building-1"), "Lamp")
    with pytest.raises(MissingLabel):
        spatial_name(b, n)


def test_names_round_trip(office):
    for name, n in name_table(office):
        assert resolve(office, name) == n
    assert len(name_table(office)) == len(office.nodes)


def test_zone_is_part_of_the_name(office):
    assert resolve(office, "node-3.desk-area.room-c.floor-2.building-1") in office.nodes


def test_absent_name(office):
    with pytest.raises(NotFound):
        resolve(office, "projector.room-b.floor-1.building-1")


def test_name_table_sorted(office):
    names = [name for name, _ in name_table(office)]
    assert names == sorted(names) and PROJECTOR in names


def test_within():
    assert SpatialName.parse(PROJECTOR).within(SpatialName.parse("floor-1.building-1"))
    assert not SpatialName.parse("floor-1.building-1").within(SpatialName.parse(PROJECTOR))


def test_device_swap_keeps_name_changes_id(office):
    old = resolve(office, PROJECTOR)
    room = office.parent[old]
    gone = remove_subtree(office, old)
    swapped, new = insert_node(gone, room, "Projector", "projector", office.nodes[old].ports)
    assert resolve(swapped, PROJECTOR) == new != old


# -- scopes ---------------------------------------------------------------------

def test_scope_round_trip_everywhere(office):
    for n in sorted(office.nodes):
        if office.control_of(n).atomic:
            continue
        assert iso_eq(reattach(office, extract_scope(office, n)), office)


def test_whole_building_has_no_boundary(office):
    scoped = extract_scope(office, resolve(office, "building-1"))
    assert scoped.boundary == {}
    assert iso_eq(scoped.view, office)


def test_room_a_crosses_once(office):
    scoped = extract_scope(office, resolve(office, "room-a.floor-1.building-1"))
    # the projector shares lan-1 with the floor hub
    assert list(scoped.boundary) == ["bnd-0"]
    assert validate(scoped.view) == []


def test_atomic_scope(office):
    with pytest.raises(AtomicScope):
        extract_scope(office, resolve(office, PROJECTOR))


def test_invented_boundary_name(office):
    scoped = extract_scope(office, resolve(office, "room-a.floor-1.building-1"))
    forged = ScopedView(scoped.view, {}, scoped.origin)
    with pytest.raises(UnknownBoundaryName):
        reattach(office, forged)


def test_scope_missing(office):
    scoped = extract_scope(office, resolve(office, "room-a.floor-1.building-1"))
    with pytest.raises(ScopeMissing):
        reattach(remove_subtree(office, scoped.origin), scoped)


def test_local_rewrite_matches_global(office, shutdown_program):
    rule = shutdown_program.rules["shutdown_nodes"]
    room = resolve(office, "room-a.floor-1.building-1")
    scoped = extract_scope(office, room)
    local_occs = find_occurrences(scoped.view, rule.redex)
    global_occs = find_occurrences(office, rule.redex)
    assert [o.key() for o in local_occs] == [o.key() for o in global_occs]
    local = apply(scoped.view, rule, local_occs[0])
    merged = reattach(office, ScopedView(local, scoped.boundary, room))
    whole = apply(office, rule, global_occs[0])
    assert iso_eq(merged, whole)
    # nothing outside the room moved
    outside = set(office.nodes) - set(office.descendants(room))
    for n in outside:
        assert merged.nodes[n] == office.nodes[n]
        assert merged.parent[n] == office.parent[n]


def test_scan_document_round_trip():
    raw = json.loads((FIXTURES / "office_scan.json").read_text())
    doc = ScanDocument.from_json(raw)
    assert ScanDocument.from_json(doc.to_json()) == doc
