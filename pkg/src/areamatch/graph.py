"""Area Graph construction: level assignment, link prediction, completion.

Nodes are image areas at size levels; edges come in two kinds, undirected
adjacency and directed inclusion (parent -> child). Completion walks the
levels bottom-up and manufactures parents for orphan nodes, by fusing
clustered orphans or expanding isolated ones, so that every node below the
top level ends up with at least one parent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .geometry import (Area, ExpansionError, ImageDims, LevelThresholds,
                       assign_level, expand_to_level, full_image_area, fuse,
                       overlap_ratio)
from .segments import CandidateSet

log = logging.getLogger(__name__)

INCLUSION = "inclusion"
ADJACENCY = "adjacency"
NONE = "none"


def link_predict(a_i: Area, a_j: Area, delta_l: float, delta_h: float) -> str:
    """Classify the relation of two areas from their overlap ratio.

    delta >= delta_h means one area effectively contains the other
    (inclusion); a mid-band delta means adjacency; delta <= delta_l means
    no relation.
    """
    delta = overlap_ratio(a_i, a_j)
    if delta >= delta_h:
        return INCLUSION
    if delta > delta_l:
        return ADJACENCY
    return NONE


@dataclass
class AreaNode:
    id: int
    area: Area
    level: int
    origin: str  # "segmentation" | "generated"


class AreaGraph:
    """Multi-relational graph over image areas.

    Inclusion edges always point from the larger area to the smaller (ties by
    lower id as parent), which makes the inclusion relation a strict order and
    the edge set acyclic by construction.
    """

    def __init__(self, dims: ImageDims, thresholds: LevelThresholds,
                 delta_l: float, delta_h: float):
        self.dims = dims
        self.thresholds = thresholds
        self.delta_l = delta_l
        self.delta_h = delta_h
        self.nodes: dict[int, AreaNode] = {}
        self.adjacency_edges: set[tuple[int, int]] = set()  # (lo, hi)
        self.inclusion_edges: set[tuple[int, int]] = set()  # (parent, child)
        self._full_image_id: int | None = None

    # -- construction -----------------------------------------------------

    def add_node(self, area: Area, level: int, origin: str) -> int:
        nid = max(self.nodes, default=-1) + 1
        self.nodes[nid] = AreaNode(nid, area, level, origin)
        return nid

    def link_node(self, nid: int) -> None:
        """Run link prediction between one node and every other node."""
        node = self.nodes[nid]
        for other in self.nodes.values():
            if other.id == nid:
                continue
            kind = link_predict(node.area, other.area, self.delta_l, self.delta_h)
            if kind == ADJACENCY:
                self.adjacency_edges.add((min(nid, other.id), max(nid, other.id)))
            elif kind == INCLUSION:
                a, b = node, other
                if (a.area.size, -a.id) >= (b.area.size, -b.id):
                    self.inclusion_edges.add((a.id, b.id))
                else:
                    self.inclusion_edges.add((b.id, a.id))

    def full_image_node(self) -> int:
        """Find or create the synthetic top-level full-image fallback node."""
        if self._full_image_id is None:
            full = full_image_area(self.dims)
            for n in self.nodes.values():
                if n.area == full:
                    self._full_image_id = n.id
                    break
            else:
                self._full_image_id = self.add_node(
                    full, self.thresholds.top_level, "generated")
                self.link_node(self._full_image_id)
        return self._full_image_id

    # -- queries ----------------------------------------------------------

    def _check(self, nid: int) -> None:
        if nid not in self.nodes:
            raise KeyError(f"unknown node id {nid}")

    def parents(self, nid: int) -> list[int]:
        self._check(nid)
        return sorted(p for p, c in self.inclusion_edges if c == nid)

    def children(self, nid: int) -> list[int]:
        self._check(nid)
        return sorted(c for p, c in self.inclusion_edges if p == nid)

    def neighbors(self, nid: int) -> list[int]:
        self._check(nid)
        out = {b if a == nid else a
               for a, b in self.adjacency_edges if nid in (a, b)}
        return sorted(out)

    def general_neighbors(self, nid: int) -> list[int]:
        """Adjacency plus inclusion treated as one undirected relation."""
        self._check(nid)
        out = set(self.neighbors(nid))
        out.update(self.parents(nid))
        out.update(self.children(nid))
        return sorted(out)

    def nodes_at_level(self, level: int) -> list[AreaNode]:
        return [n for n in self.nodes.values() if n.level == level]

    def source_nodes(self, l_star: int) -> list[AreaNode]:
        return self.nodes_at_level(l_star)

    def has_higher_parent(self, nid: int) -> bool:
        lvl = self.nodes[nid].level
        return any(self.nodes[p].level > lvl for p in self.parents(nid))

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dims": {"width": self.dims.width, "height": self.dims.height},
            "thresholds": list(self.thresholds.levels),
            "delta_l": self.delta_l,
            "delta_h": self.delta_h,
            "nodes": [{"id": n.id, "rect": n.area.to_list(), "level": n.level,
                       "origin": n.origin}
                      for n in sorted(self.nodes.values(), key=lambda n: n.id)],
            "adjacency": sorted(list(e) for e in self.adjacency_edges),
            "inclusion": sorted(list(e) for e in self.inclusion_edges),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AreaGraph":
        g = cls(ImageDims(int(obj["dims"]["width"]), int(obj["dims"]["height"])),
                LevelThresholds(tuple(int(v) for v in obj["thresholds"])),
                float(obj["delta_l"]), float(obj["delta_h"]))
        for rec in obj["nodes"]:
            g.nodes[int(rec["id"])] = AreaNode(
                int(rec["id"]), Area.from_list(rec["rect"]),
                int(rec["level"]), str(rec["origin"]))
        g.adjacency_edges = {(int(a), int(b)) for a, b in obj["adjacency"]}
        g.inclusion_edges = {(int(p), int(c)) for p, c in obj["inclusion"]}
        return g


def build_initial_graph(c: CandidateSet, t: LevelThresholds,
                        delta_l: float, delta_h: float) -> AreaGraph:
    """Nodes from candidates with levels, edges from all-pairs link prediction.

    Candidates below TL_0 (possible only when T_s is configured below TL_0)
    clamp to level 0.
    """
    g = AreaGraph(c.dims, t, delta_l, delta_h)
    for cand in c.areas:
        level = assign_level(cand.area, t)
        g.add_node(cand.area, 0 if level is None else level, "segmentation")
    ids = sorted(g.nodes)
    for idx, nid in enumerate(ids):
        node = g.nodes[nid]
        for other_id in ids[idx + 1:]:
            other = g.nodes[other_id]
            kind = link_predict(node.area, other.area, delta_l, delta_h)
            if kind == ADJACENCY:
                g.adjacency_edges.add((nid, other_id))
            elif kind == INCLUSION:
                if (node.area.size, -nid) >= (other.area.size, -other_id):
                    g.inclusion_edges.add((nid, other_id))
                else:
                    g.inclusion_edges.add((other_id, nid))
    return g


def _kmeans(points: np.ndarray, k: int, iters: int = 50):
    """Deterministic Lloyd k-means with farthest-point initialization.

    The first center is the lowest-index point; each further center is the
    point maximizing the distance to the nearest chosen center (ties to the
    lowest index). Returns (labels, wcss).
    """
    n = points.shape[0]
    centers = [points[0]]
    min_d = np.linalg.norm(points - centers[0], axis=1)
    while len(centers) < k:
        idx = int(np.argmax(min_d))
        centers.append(points[idx])
        min_d = np.minimum(min_d, np.linalg.norm(points - centers[-1], axis=1))
    centers = np.array(centers, dtype=float)

    labels = np.full(n, -1, dtype=int)
    for _ in range(iters):
        d = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
        new_labels = np.argmin(d, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = points[labels == j]
            if members.size:
                centers[j] = members.mean(axis=0)
    d = np.linalg.norm(points - centers[labels], axis=1)
    return labels, float(np.sum(d ** 2))


def kmeans_elbow(points, k_max: int) -> np.ndarray:
    """Cluster 2-D points, choosing k by the elbow of the WCSS curve.

    The elbow is the k with the largest second difference of WCSS over
    k = 2..k_max-1; a flat curve (all points coincident) or fewer than three
    points collapses to k = 1.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = pts.shape[0]
    k_max = min(k_max, n)
    if n <= 2 or k_max < 3:
        return np.zeros(n, dtype=int)
    wcss = {}
    labels_for = {}
    for k in range(1, k_max + 1):
        labels_for[k], wcss[k] = _kmeans(pts, k)
    if wcss[1] < 1e-12:
        return labels_for[1]
    second = {k: wcss[k - 1] - 2.0 * wcss[k] + wcss[k + 1]
              for k in range(2, k_max)}
    best_k, best_v = 1, 1e-12
    for k in sorted(second):
        if second[k] > best_v:
            best_k, best_v = k, second[k]
    return labels_for[best_k]


def complete_graph(g: AreaGraph, t: LevelThresholds, dims: ImageDims,
                   delta_l: float, delta_h: float) -> AreaGraph:
    """Give every node below the top level a parent.

    Walks levels 0..L-2. Orphans (nodes without a strictly-higher-level
    parent) are clustered by their centers; within a cluster of two or more,
    each not-yet-fused node is fused with its nearest cluster mate into a
    generated parent node, expanded to the next level when the envelope does
    not already reach one. Singleton clusters are expanded directly. Areas
    that cannot grow within the image attach to the full-image fallback node.
    """
    for level in range(t.num_levels - 1):
        orphans = [n for n in g.nodes_at_level(level)
                   if not g.has_higher_parent(n.id)]
        if not orphans:
            continue
        orphans.sort(key=lambda n: n.id)
        centers = np.array([n.area.center for n in orphans])
        labels = kmeans_elbow(centers, len(orphans))
        for cluster_id in sorted(set(labels.tolist())):
            members = [orphans[i] for i in range(len(orphans))
                       if labels[i] == cluster_id]
            if len(members) >= 2:
                _fuse_cluster(g, members, level, t, dims)
            else:
                _expand_singleton(g, members[0], level, t, dims)
    return g


def _generate_parent(g: AreaGraph, area: Area, floor_level: int,
                     t: LevelThresholds, dims: ImageDims) -> int:
    """Add a generated node for the area, expanded past floor_level if needed."""
    level = assign_level(area, t)
    if level is None or level <= floor_level:
        area = expand_to_level(area, floor_level + 1, t, dims)
        level = assign_level(area, t)
    nid = g.add_node(area, level, "generated")
    g.link_node(nid)
    return nid


def _fuse_cluster(g: AreaGraph, members: list[AreaNode], level: int,
                  t: LevelThresholds, dims: ImageDims) -> None:
    fused: set[int] = set()
    for node in members:
        if node.id in fused:
            continue
        others = [m for m in members if m.id != node.id]
        cx, cy = node.area.center
        mate = min(others, key=lambda m: ((m.area.center[0] - cx) ** 2
                                          + (m.area.center[1] - cy) ** 2,
                                          m.id))
        envelope = fuse(node.area, mate.area)
        try:
            _generate_parent(g, envelope, level, t, dims)
        except ExpansionError:
            _attach_fallback(g, node.id)
            _attach_fallback(g, mate.id)
        fused.add(node.id)
        fused.add(mate.id)


def _expand_singleton(g: AreaGraph, node: AreaNode, level: int,
                      t: LevelThresholds, dims: ImageDims) -> None:
    try:
        expanded = expand_to_level(node.area, level + 1, t, dims)
        nid = g.add_node(expanded, assign_level(expanded, t), "generated")
        g.link_node(nid)
    except ExpansionError:
        _attach_fallback(g, node.id)


def _attach_fallback(g: AreaGraph, child_id: int) -> None:
    full_id = g.full_image_node()
    if full_id != child_id:
        g.inclusion_edges.add((full_id, child_id))
        log.debug("node %d attached to full-image fallback", child_id)


def build_area_graph(c: CandidateSet, t: LevelThresholds, delta_l: float,
                     delta_h: float, complete: bool = True) -> AreaGraph:
    g = build_initial_graph(c, t, delta_l, delta_h)
    if complete:
        complete_graph(g, t, c.dims, delta_l, delta_h)
    return g
