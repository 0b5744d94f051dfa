import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hecix.errors import (
    DanglingEndpoint,
    EmptyLabel,
    IdCollision,
    NotFound,
    SnapshotCorrupt,
)
from hecix.graph import (
    PropertyGraph,
    snapshot_load,
    snapshot_loads,
    snapshot_save,
)


def five_node_fixture() -> PropertyGraph:
    # d <- c(TREATS), d <- s(STUDIES), d -> g1, d -> g2 (ASSOCIATES)
    g = PropertyGraph()
    d = g.add_node("Disease", {"name": "vitiligo", "ext_id": "DOID:12306"})
    c = g.add_node("Compound", {"name": "tofacitinib"})
    s = g.add_node("Study", {"name": "trial one", "ext_id": "NCT00000001"})
    g1 = g.add_node("Gene", {"name": "JAK1"})
    g2 = g.add_node("Gene", {"name": "JAK2"})
    g.add_edge("TREATS_CtD", c, d)
    g.add_edge("STUDIES", s, d)
    g.add_edge("ASSOCIATES_DaG", d, g1)
    g.add_edge("ASSOCIATES_DaG", d, g2)
    return g


class TestAddNode:
    def test_store_and_retrieve(self):
        g = PropertyGraph()
        nid = g.add_node("Disease", {"name": "vitiligo"})
        assert g.get_node(nid).label == "Disease"
        assert g.get_node(nid).properties["name"] == "vitiligo"

    def test_empty_label_rejected(self):
        with pytest.raises(EmptyLabel):
            PropertyGraph().add_node("", {"name": "x"})

    def test_ids_are_monotonic_insertion_order(self):
        g = PropertyGraph()
        ids = [g.add_node("N") for _ in range(5)]
        assert ids == [0, 1, 2, 3, 4]

    def test_explicit_id_collision(self):
        g = PropertyGraph()
        g.add_node("N", node_id=7)
        with pytest.raises(IdCollision):
            g.add_node("N", node_id=7)

    def test_counts_accumulate(self):
        g = PropertyGraph()
        for _ in range(6):
            g.add_node("Disease")
        for _ in range(1065):
            g.add_node("Gene")
        assert g.stats().nodes == 1071


class TestAddEdge:
    def test_store_and_neighbors(self):
        g = PropertyGraph()
        c = g.add_node("Compound")
        d = g.add_node("Disease")
        g.add_edge("TREATS_CtD", c, d)
        assert g.neighbors(c, "out", "TREATS_CtD") == {d}

    def test_dangling_endpoint(self):
        g = PropertyGraph()
        n = g.add_node("N")
        with pytest.raises(DanglingEndpoint):
            g.add_edge("X", n, 999)

    def test_fixture_edge_count(self):
        assert five_node_fixture().stats().edges == 4


class TestNeighbors:
    def test_isolated_node(self):
        g = PropertyGraph()
        n = g.add_node("N")
        assert g.neighbors(n, "both") == set()

    def test_in_and_out_on_path(self):
        g = PropertyGraph()
        a, b, c = (g.add_node("N") for _ in range(3))
        g.add_edge("E", a, b)
        g.add_edge("E", b, c)
        assert g.neighbors(b, "in") == {a}
        assert g.neighbors(b, "out") == {c}
        assert g.neighbors(b, "both") == {a, c}

    def test_unknown_node(self):
        with pytest.raises(NotFound):
            PropertyGraph().neighbors(0)

    def test_bad_direction_rejected(self):
        g = PropertyGraph()
        n = g.add_node("N")
        with pytest.raises(ValueError):
            g.neighbors(n, "sideways")

    def test_rel_type_filter_matches_fixture(self):
        g = five_node_fixture()
        genes = {nid for nid, n in g.nodes.items() if n.label == "Gene"}
        assert g.neighbors(0, "out", "ASSOCIATES_DaG") == genes
        assert g.neighbors(0, "in", "STUDIES") == {2}


class TestFindNodes:
    def test_label_lookup(self, golden_graph):
        assert len(golden_graph.find_nodes("Disease")) == 6

    def test_absent_label(self):
        assert PropertyGraph().find_nodes("Nope") == set()

    def test_index_matches_linear_scan(self):
        rng = random.Random(7)
        g = PropertyGraph()
        labels = ["A", "B", "C"]
        names = ["x", "y", "z", "w"]
        for _ in range(1000):
            props = {}
            if rng.random() < 0.8:
                props["name"] = rng.choice(names)
            if rng.random() < 0.3:
                props["other"] = rng.choice(names)
            g.add_node(rng.choice(labels), props)
        for label in labels:
            for name in names:
                via_index = g.find_nodes(label, "name", name)
                via_scan = {
                    nid
                    for nid in g.nodes
                    if g.nodes[nid].label == label
                    and g.nodes[nid].properties.get("name") == name
                }
                assert via_index == via_scan
                # non-indexed key goes through the scan path
                assert g.find_nodes(label, "other", name) == {
                    nid
                    for nid in g.nodes
                    if g.nodes[nid].label == label
                    and g.nodes[nid].properties.get("other") == name
                }


class TestSnapshot:
    def test_empty_round_trip(self, tmp_path):
        path = tmp_path / "empty.snapshot"
        snapshot_save(PropertyGraph(), path)
        loaded = snapshot_load(path)
        assert loaded.stats().nodes == 0
        assert loaded.stats().edges == 0

    def test_fixture_round_trip_identical(self, tmp_path):
        g = five_node_fixture()
        path = tmp_path / "g.snapshot"
        snapshot_save(g, path)
        loaded = snapshot_load(path)
        assert loaded.dumps() == g.dumps()
        assert loaded.nodes == g.nodes
        assert loaded.edges == g.edges

    def test_save_is_deterministic(self, tmp_path):
        g = five_node_fixture()
        p1, p2 = tmp_path / "a", tmp_path / "b"
        snapshot_save(g, p1)
        snapshot_save(g, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_scalar_types_survive(self, tmp_path):
        g = PropertyGraph()
        g.add_node(
            "N",
            {"s": "text with\ttab", "i": -42, "f": 3.25, "b": True, "b2": False},
        )
        path = tmp_path / "types.snapshot"
        snapshot_save(g, path)
        props = snapshot_load(path).get_node(0).properties
        assert props == {"s": "text with\ttab", "i": -42, "f": 3.25, "b": True, "b2": False}
        assert isinstance(props["b"], bool) and isinstance(props["i"], int)

    def test_bad_header(self):
        with pytest.raises(SnapshotCorrupt) as info:
            snapshot_loads("WRONG v9\n")
        assert info.value.line == 1

    def test_corrupt_line_reports_position(self):
        text = "HECIX-SNAPSHOT v1\nN\t0\tDisease\t\nE\t0\tREL\t0\n"
        with pytest.raises(SnapshotCorrupt) as info:
            snapshot_loads(text)
        assert info.value.line == 3

    def test_node_after_edge_rejected(self):
        text = (
            "HECIX-SNAPSHOT v1\n"
            "N\t0\tDisease\t\n"
            "E\t0\tREL\t0\t0\t\n"
            "N\t1\tGene\t\n"
        )
        with pytest.raises(SnapshotCorrupt) as info:
            snapshot_loads(text)
        assert info.value.line == 4

    def test_unknown_record_kind_rejected(self):
        with pytest.raises(SnapshotCorrupt):
            snapshot_loads("HECIX-SNAPSHOT v1\nX\t0\tweird\n")

    def test_dangling_edge_in_snapshot_rejected(self):
        text = "HECIX-SNAPSHOT v1\nN\t0\tDisease\t\nE\t0\tREL\t0\t7\t\n"
        with pytest.raises(SnapshotCorrupt) as info:
            snapshot_loads(text)
        assert info.value.line == 3

    def test_new_ids_continue_after_load(self, tmp_path):
        g = five_node_fixture()
        path = tmp_path / "g.snapshot"
        snapshot_save(g, path)
        loaded = snapshot_load(path)
        assert loaded.add_node("N") == 5

    @settings(max_examples=50, deadline=None)
    @given(
        props=st.dictionaries(
            st.text(
                alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
                min_size=1,
                max_size=8,
            ),
            st.one_of(
                st.text(
                    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
                    max_size=12,
                ),
                st.integers(-1000, 1000),
                st.booleans(),
                st.floats(allow_nan=False, allow_infinity=False, width=32),
            ),
            max_size=5,
        )
    )
    def test_property_codec_round_trip(self, props):
        g = PropertyGraph()
        g.add_node("N", props)
        assert snapshot_loads(g.dumps()).get_node(0).properties == props


class TestIntegrity:
    def test_fixture_passes(self):
        five_node_fixture().check_integrity()

    def test_golden_graph_passes(self, golden_graph):
        golden_graph.check_integrity()
