import json

import numpy as np

from areamatch.geometry import (Area, ImageDims, LevelThresholds, assign_level,
                                overlap_ratio)
from areamatch.graph import (AreaGraph, build_area_graph, build_initial_graph,
                             complete_graph, kmeans_elbow, link_predict)
from areamatch.segments import CandidateArea, CandidateSet

T = LevelThresholds()
DIMS = ImageDims(640, 480)
DL, DH = 0.1, 0.8


def _candidates(rects):
    return CandidateSet(DIMS, [CandidateArea(Area(*r), "segmentation")
                               for r in rects])


def test_link_predict_bands():
    # delta = 0.9: [0,0,100,100) vs [10,0,110,90): inter 90*90=8100, min 9000
    assert link_predict(Area(0, 0, 100, 100), Area(10, 0, 110, 90), DL, DH) \
        == "inclusion"
    # delta = 0.5
    assert link_predict(Area(0, 0, 100, 100), Area(50, 0, 150, 100), DL, DH) \
        == "adjacency"
    # delta exactly delta_l -> none
    assert link_predict(Area(0, 0, 100, 100), Area(90, 0, 190, 100), DL, DH) \
        == "none"
    assert link_predict(Area(0, 0, 10, 10), Area(300, 300, 400, 400), DL, DH) \
        == "none"


def test_build_initial_graph_cases():
    g = build_initial_graph(_candidates([(0, 0, 100, 100)]), T, DL, DH)
    assert len(g.nodes) == 1
    assert not g.adjacency_edges and not g.inclusion_edges

    g = build_initial_graph(
        _candidates([(0, 0, 100, 100), (300, 300, 400, 400)]), T, DL, DH)
    assert not g.adjacency_edges and not g.inclusion_edges

    # identical rects (dedupe bypassed): inclusion with delta = 1
    cs = CandidateSet(DIMS, [CandidateArea(Area(0, 0, 100, 100), "segmentation"),
                             CandidateArea(Area(0, 0, 100, 100), "segmentation")])
    g = build_initial_graph(cs, T, DL, DH)
    assert g.inclusion_edges == {(0, 1)}  # tie broken to the lower id as parent


def test_inclusion_parent_is_larger():
    g = build_initial_graph(
        _candidates([(10, 10, 90, 90), (0, 0, 200, 200)]), T, DL, DH)
    assert g.inclusion_edges == {(1, 0)}
    assert g.parents(0) == [1]
    assert g.children(1) == [0]


def test_neighbors_symmetric():
    g = build_initial_graph(
        _candidates([(0, 0, 100, 100), (50, 0, 150, 100), (300, 0, 420, 90)]),
        T, DL, DH)
    for nid in g.nodes:
        for m in g.neighbors(nid):
            assert nid in g.neighbors(m)


def test_kmeans_elbow_cases():
    assert kmeans_elbow(np.array([[5.0, 5.0]]), 1).tolist() == [0]
    same = np.tile([[3.0, 4.0]], (6, 1))
    assert len(set(kmeans_elbow(same, 6).tolist())) == 1

    rng = np.random.default_rng(0)
    blob_a = rng.normal((0, 0), 0.5, size=(10, 2))
    blob_b = rng.normal((100, 100), 0.5, size=(10, 2))
    pts = np.vstack([blob_a, blob_b])
    labels = kmeans_elbow(pts, len(pts))
    assert len(set(labels.tolist())) == 2
    assert len(set(labels[:10].tolist())) == 1
    assert len(set(labels[10:].tolist())) == 1


def test_kmeans_two_points():
    labels = kmeans_elbow(np.array([[0.0, 0.0], [50.0, 0.0]]), 2)
    assert labels.tolist() == [0, 0]


def test_complete_graph_no_orphans_unchanged():
    g = build_initial_graph(
        _candidates([(0, 0, 300, 300), (10, 10, 110, 110)]), T, DL, DH)
    before = g.to_json()
    complete_graph(g, T, DIMS, DL, DH)
    # node 1 (level 0) already has the level-2 parent; node 0 is the only
    # orphan below top, so its generated ancestor is the single new node
    assert 0 in g.parents(1)
    gen = [n for n in g.nodes.values() if n.origin == "generated"]
    assert len(gen) == 1 and gen[0].level == 3
    assert gen[0].id in g.parents(0)
    assert before["nodes"][0] == g.to_json()["nodes"][0]


def test_complete_graph_fuses_adjacent_orphans():
    # two adjacent level-0 areas whose envelope reaches level 1
    g = build_initial_graph(
        _candidates([(100, 100, 200, 200), (190, 100, 290, 200)]), T, DL, DH)
    complete_graph(g, T, DIMS, DL, DH)
    gen = [n for n in g.nodes.values() if n.origin == "generated"]
    assert gen, "expected a generated parent"
    parent = gen[0]
    assert parent.level >= 1
    assert set(g.children(parent.id)) >= {0, 1}


def test_complete_graph_expands_singleton():
    g = build_initial_graph(_candidates([(270, 190, 370, 290)]), T, DL, DH)
    complete_graph(g, T, DIMS, DL, DH)
    assert g.parents(0), "singleton orphan should gain a parent"
    parent = g.nodes[g.parents(0)[0]]
    assert parent.level == 1
    assert parent.area.contains(g.nodes[0].area)


def test_complete_graph_coverage_random():
    rng = np.random.default_rng(21)
    for _ in range(30):
        n = int(rng.integers(1, 10))
        rects = []
        for _ in range(n):
            w = int(rng.integers(80, 350))
            h = int(rng.integers(80, 300))
            x0 = int(rng.integers(0, 640 - w))
            y0 = int(rng.integers(0, 480 - h))
            rects.append((x0, y0, x0 + w, y0 + h))
        g = build_area_graph(_candidates(rects), T, DL, DH)
        top = T.top_level
        for node in g.nodes.values():
            if node.level < top:
                assert g.parents(node.id), f"node {node.id} has no parent"
            assert node.area.inside(DIMS)
        _assert_acyclic(g)
        _assert_edges_consistent(g)


def _assert_acyclic(g: AreaGraph):
    state = {}

    def visit(v):
        state[v] = 1
        for c in g.children(v):
            assert state.get(c) != 1, "inclusion cycle"
            if state.get(c) is None:
                visit(c)
        state[v] = 2

    for v in g.nodes:
        if state.get(v) is None:
            visit(v)


def _assert_edges_consistent(g: AreaGraph):
    for a, b in g.adjacency_edges:
        d = overlap_ratio(g.nodes[a].area, g.nodes[b].area)
        assert g.delta_l < d < g.delta_h
    for p, c in g.inclusion_edges:
        d = overlap_ratio(g.nodes[p].area, g.nodes[c].area)
        assert d >= g.delta_h
        assert g.nodes[p].level >= g.nodes[c].level


def test_complete_graph_deterministic():
    rects = [(0, 0, 100, 100), (90, 0, 190, 100), (400, 300, 520, 420),
             (50, 200, 250, 380)]
    a = build_area_graph(_candidates(rects), T, DL, DH).to_json()
    b = build_area_graph(_candidates(rects), T, DL, DH).to_json()
    assert a == b


def test_source_nodes_and_levels():
    g = build_area_graph(
        _candidates([(0, 0, 150, 150), (300, 100, 460, 260)]), T, DL, DH)
    for node in g.source_nodes(1):
        assert node.level == 1
        assert assign_level(node.area, T) == 1


def test_graph_serialization_roundtrip():
    g = build_area_graph(
        _candidates([(0, 0, 100, 100), (90, 0, 190, 100), (10, 5, 180, 170)]),
        T, DL, DH)
    blob = json.dumps(g.to_json(), sort_keys=True)
    back = AreaGraph.from_json(json.loads(blob))
    assert json.dumps(back.to_json(), sort_keys=True) == blob


def test_unknown_id_raises():
    g = build_area_graph(_candidates([(0, 0, 100, 100)]), T, DL, DH)
    try:
        g.parents(999)
        assert False
    except KeyError:
        pass
