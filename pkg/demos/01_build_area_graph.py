"""Build an area graph from segmentation masks and walk its structure.

Generates one synthetic scene so the demo has no external inputs, turns
its masks into candidate areas, and prints the resulting level hierarchy.
"""

from areamatch import (ImageDims, LevelThresholds, RunConfig,
                       build_area_graph, candidates_from_masks,
                       gen_synthetic, masks_from_rects, SceneSpec)

cfg = RunConfig()
scene = gen_synthetic(7, SceneSpec(1, "identity", n_segments=5,
                                   width=640, height=480))[0]
dims = ImageDims(640, 480)

masks = masks_from_rects(scene.rects0, dims)
cands = candidates_from_masks(masks, cfg.T_s, cfg.T_r, dims)
print(f"{len(masks)} masks -> {len(cands.areas)} candidate areas")
for w in cands.warnings:
    print("  warning:", w)

t = LevelThresholds(tuple(cfg.TL))
g = build_area_graph(cands, t, cfg.delta_l, cfg.delta_h)
print(f"graph: {len(g.nodes)} nodes, {len(g.inclusion_edges)} inclusion edges")

for level in range(t.num_levels - 1, -1, -1):
    nodes = g.nodes_at_level(level)
    if not nodes:
        continue
    print(f"level {level}:")
    for n in nodes:
        kids = g.children(n.id)
        tail = f" -> children {kids}" if kids else ""
        print(f"  node {n.id} {n.area.to_list()} ({n.origin}){tail}")

sources = g.source_nodes(cfg.l_star)
print(f"{len(sources)} source nodes at level {cfg.l_star}: "
      f"{[n.id for n in sources]}")
