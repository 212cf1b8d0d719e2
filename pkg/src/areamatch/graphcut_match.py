"""Sparse area matching by binary MRF energy minimization plus refinement.

For one source area, every node of the target graph gets a binary label
(matched / not matched). The energy couples per-node similarity evidence with
Potts smoothing over the target graph's general adjacency, weighted by IoU;
it is submodular, so an s-t min cut minimizes it exactly. The matched
candidate set is then re-ranked by a relation-aware global energy over
parents, children, and neighbors, and near-best candidates are fused into the
final target rectangle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .geometry import Area, iou
from .graph import AreaGraph
from .mincut import max_flow
from .similarity import SimilarityMatrix

log = logging.getLogger(__name__)


@dataclass
class AMRF:
    """Energy model over the target graph for one fixed source area."""

    node_ids: list[int]               # target node ids, ascending
    similarities: np.ndarray          # S_i aligned with node_ids
    edges: list[tuple[int, int, float]]  # (index_i, index_j, iou weight)
    lam: float

    def __post_init__(self):
        if len(self.node_ids) != self.similarities.size:
            raise ValueError("similarity vector does not match node list")


@dataclass
class AreaMatch:
    source: Area
    target: Area
    energy: float
    direction: str  # "forward" | "reverse" | "merged"

    def to_json(self) -> dict:
        return {"source": self.source.to_list(), "target": self.target.to_list(),
                "energy": self.energy, "direction": self.direction}

    @classmethod
    def from_json(cls, obj) -> "AreaMatch":
        return cls(Area.from_list(obj["source"]), Area.from_list(obj["target"]),
                   float(obj["energy"]), str(obj["direction"]))


def build_amrf(g1: AreaGraph, sims: dict[int, float], lam: float) -> AMRF:
    node_ids = sorted(g1.nodes)
    index = {nid: k for k, nid in enumerate(node_ids)}
    seen = set()
    edges = []
    for nid in node_ids:
        for other in g1.general_neighbors(nid):
            key = (min(nid, other), max(nid, other))
            if key in seen:
                continue
            seen.add(key)
            w = iou(g1.nodes[key[0]].area, g1.nodes[key[1]].area)
            edges.append((index[key[0]], index[key[1]], w))
    s = np.array([sims[nid] for nid in node_ids], dtype=float)
    return AMRF(node_ids, s, edges, lam)


def total_energy(x, amrf: AMRF) -> float:
    """Unary |x_i - S_i| plus lam * IoU-weighted Potts disagreement."""
    x = np.asarray(x, dtype=float)
    if x.size != amrf.similarities.size:
        raise ValueError("labeling size mismatch")
    e = float(np.abs(x - amrf.similarities).sum())
    for i, j, w in amrf.edges:
        if x[i] != x[j]:
            e += amrf.lam * w
    return e


def min_cut_solve(amrf: AMRF) -> np.ndarray:
    """Exact minimizer of total_energy via s-t min cut.

    Vertex layout: 0 = source, 1..n = nodes, n+1 = sink. A node on the source
    side takes label 1 (cutting its sink edge costs |1 - S_i|); on the sink
    side label 0 (cutting the source edge costs S_i). Potts terms become
    symmetric capacities, so the cut value equals the labeling energy.
    """
    n = amrf.similarities.size
    cap = np.zeros((n + 2, n + 2))
    s, t = 0, n + 1
    for k, sim in enumerate(amrf.similarities):
        cap[s, k + 1] = sim              # pay when labeled 0
        cap[k + 1, t] = 1.0 - sim        # pay when labeled 1
    for i, j, w in amrf.edges:
        cap[i + 1, j + 1] += amrf.lam * w
        cap[j + 1, i + 1] += amrf.lam * w
    _, source_side = max_flow(cap, s, t)
    return source_side[1:n + 1].astype(int)


def matched_ids(amrf: AMRF, labels: np.ndarray) -> list[int]:
    return [nid for nid, x in zip(amrf.node_ids, labels) if x == 1]


# -- relation-aware global energy -----------------------------------------


def _relation_energy(ids0, ids1, ms) -> float | None:
    """min |1 - Sim| over the pair set; None when either side is empty."""
    if not ids0 or not ids1:
        return None
    best = None
    for u in ids0:
        for v in ids1:
            e = abs(1.0 - ms.get_or_compute(u, v))
            if best is None or e < best:
                best = e
    return best


def e_self(src: int, h: int, ms) -> float:
    return abs(1.0 - ms.get_or_compute(src, h))


def e_parent(src: int, h: int, g0: AreaGraph, g1: AreaGraph, ms):
    return _relation_energy(g0.parents(src), g1.parents(h), ms)


def e_children(src: int, h: int, g0: AreaGraph, g1: AreaGraph, ms):
    return _relation_energy(g0.children(src), g1.children(h), ms)


def e_neighbor(src: int, h: int, g0: AreaGraph, g1: AreaGraph, ms):
    return _relation_energy(g0.neighbors(src), g1.neighbors(h), ms)


def global_energy(src: int, h: int, g0: AreaGraph, g1: AreaGraph, ms,
                  cfg: RunConfig) -> float:
    """Weighted mean of the present relation energies, normalized by their
    weight sum so nodes with different relation counts stay comparable."""
    terms = [(cfg.mu, e_self(src, h, ms)),
             (cfg.alpha, e_parent(src, h, g0, g1, ms)),
             (cfg.beta, e_children(src, h, g0, g1, ms)),
             (cfg.gamma, e_neighbor(src, h, g0, g1, ms))]
    num = z = 0.0
    for weight, value in terms:
        if value is not None and weight > 0:
            num += weight * value
            z += weight
    return num / z if z else 0.0


def refine_and_fuse(candidates: list[int], src: int, g0: AreaGraph,
                    g1: AreaGraph, ms, cfg: RunConfig,
                    direction: str = "forward") -> AreaMatch | None:
    """Re-rank min-cut candidates by global energy and fuse the near-best.

    No match when the candidate set is empty or the best energy exceeds
    T_Emax. Candidates within T_Er of the best are fused by softmin-weighted
    corner averaging.
    """
    if not candidates:
        return None
    energies = {h: global_energy(src, h, g0, g1, ms, cfg)
                for h in sorted(candidates)}
    best = min(sorted(energies), key=lambda h: energies[h])
    if energies[best] > cfg.T_Emax:
        return None
    kept = [h for h in sorted(energies)
            if abs(energies[h] - energies[best]) <= cfg.T_Er]
    weights = np.array([math.exp(-energies[h]) for h in kept])
    weights /= weights.sum()
    corners = np.array([g1.nodes[h].area.to_list() for h in kept], dtype=float)
    fused = (weights[:, None] * corners).sum(axis=0)
    x0, y0 = int(round(fused[0])), int(round(fused[1]))
    x1, y1 = max(int(round(fused[2])), x0 + 1), max(int(round(fused[3])), y0 + 1)
    return AreaMatch(g0.nodes[src].area, Area(x0, y0, x1, y1),
                     float(energies[best]), direction)


def match_one_source(src: int, g0: AreaGraph, g1: AreaGraph, ms,
                     cfg: RunConfig, direction: str = "forward"):
    """Min-cut labeling plus refinement for one source node.

    Parent pairs are scored before the source row so low-similarity parents
    can prune their children's cells ahead of the row fill.
    """
    src_parents = g0.parents(src)
    sims = {}
    for h in sorted(g1.nodes):
        for p1 in g1.parents(h):
            for p0 in src_parents:
                ms.get_or_compute(p0, p1)
        sims[h] = ms.get_or_compute(src, h)
    amrf = build_amrf(g1, sims, cfg.lam)
    labels = min_cut_solve(amrf)
    return refine_and_fuse(matched_ids(amrf, labels), src, g0, g1, ms, cfg,
                           direction)


def match_source_areas(g0: AreaGraph, g1: AreaGraph, ms: SimilarityMatrix,
                       cfg: RunConfig) -> list[AreaMatch]:
    """Match every level-l* source node of g0 into g1.

    With cfg.bidirectional, a second pass runs from g1's sources through the
    transposed similarity view; mutually consistent pairs (both directions
    agree with IoU >= 0.5 on both rects) merge by corner averaging and the
    rest are kept one-directional.
    """
    forward = _one_direction(g0, g1, ms, cfg, "forward")
    if not cfg.bidirectional:
        return forward
    reverse = _one_direction(g1, g0, ms.transposed(), cfg, "reverse")
    return _merge_bidirectional(forward, reverse)


def _one_direction(g0, g1, ms, cfg, direction) -> list[AreaMatch]:
    out = []
    for node in sorted(g0.source_nodes(cfg.l_star), key=lambda n: n.id):
        try:
            m = match_one_source(node.id, g0, g1, ms, cfg, direction)
        except Exception:
            log.exception("source %d failed to match", node.id)
            continue
        if m is not None:
            out.append(m)
    return out


def _average_rect(a: Area, b: Area) -> Area:
    v = (np.array(a.to_list(), float) + np.array(b.to_list(), float)) / 2.0
    x0, y0 = int(round(v[0])), int(round(v[1]))
    return Area(x0, y0, max(int(round(v[2])), x0 + 1), max(int(round(v[3])), y0 + 1))


def _merge_bidirectional(forward, reverse) -> list[AreaMatch]:
    used = set()
    out = []
    for f in forward:
        partner = None
        for k, r in enumerate(reverse):
            if k in used:
                continue
            if iou(f.target, r.source) >= 0.5 and iou(r.target, f.source) >= 0.5:
                partner = k
                break
        if partner is None:
            out.append(f)
            continue
        r = reverse[partner]
        used.add(partner)
        out.append(AreaMatch(_average_rect(f.source, r.target),
                             _average_rect(f.target, r.source),
                             min(f.energy, r.energy), "merged"))
    # unpaired reverse matches flip into image0 -> image1 orientation
    out.extend(AreaMatch(r.target, r.source, r.energy, "reverse")
               for k, r in enumerate(reverse) if k not in used)
    return out
