"""Semantic-area matching for two-view feature matching.

Segmentation masks become an area graph per image; areas are matched across
views either by graph-cut energy minimization (sparse) or by a GMM matching
distribution with EM cycle refinement (dense); matched area pairs are cropped,
point-matched, and fused back into full-image correspondences.
"""

from .config import ConfigError, RunConfig
from .dense_match import (DenseAreaMatcher, GMMParams, PatchMatch,
                          baseline_coarse_match, build_gmm, density,
                          density_level, em_refine, extract_area,
                          load_coarse_matches, match_area_dmesa, sample_gmm,
                          snap_to_patch_grid)
from .epipolar import (decompose_essential, eight_point, estimate_essential,
                       ransac_fundamental, relative_pose_error,
                       sampson_distance)
from .geometry import (Area, ExpansionError, ImageDims, LevelThresholds,
                       assign_level, expand_to_aspect, expand_to_level, fuse,
                       full_image_area, iou, overlap_ratio)
from .graph import (AreaGraph, AreaNode, build_area_graph,
                    build_initial_graph, complete_graph, kmeans_elbow,
                    link_predict)
from .graphcut_match import (AMRF, AreaMatch, build_amrf, global_energy,
                             match_source_areas, min_cut_solve, total_energy)
from .metrics import (acr, amp, aor, mma, parse_gt, pose_auc, pose_error,
                      write_report)
from .mincut import max_flow
from .pipeline import (CropTransform, PointMatch, baseline_point_matcher,
                       crop_area_pair, geometric_filter, global_collection,
                       matches_from_json, matches_to_json, run_a2pm)
from .segments import (CandidateArea, CandidateSet, IngestError, SegmentMask,
                       candidates_from_masks, decode_rle, encode_rle,
                       load_masks, mask_to_area, preprocess)
from .similarity import (NccSimilarityProvider, SimilarityMatrix,
                         area_similarity, baseline_activity,
                         image_pair_scorer, load_similarity_table,
                         table_scorer)
from .synthetic import (PoseScene, SceneSpec, SyntheticScene, gen_pose_scene,
                        gen_synthetic, masks_from_rects, scene_gt_json,
                        warp_points, warp_rect_bbox, write_scene)

__all__ = [
    "AMRF", "Area", "AreaGraph", "AreaMatch", "AreaNode", "CandidateArea",
    "CandidateSet", "ConfigError", "CropTransform", "DenseAreaMatcher",
    "ExpansionError", "GMMParams", "ImageDims", "IngestError",
    "LevelThresholds", "NccSimilarityProvider", "PatchMatch", "PointMatch",
    "PoseScene", "RunConfig", "SceneSpec", "SegmentMask", "SimilarityMatrix",
    "SyntheticScene", "acr", "amp", "aor", "area_similarity",
    "assign_level", "baseline_activity", "baseline_coarse_match",
    "baseline_point_matcher", "build_amrf", "build_area_graph", "build_gmm",
    "build_initial_graph", "candidates_from_masks", "complete_graph",
    "crop_area_pair", "decode_rle", "decompose_essential", "density",
    "density_level", "eight_point", "em_refine", "encode_rle",
    "estimate_essential", "expand_to_aspect", "expand_to_level",
    "extract_area", "fuse", "full_image_area", "gen_pose_scene",
    "gen_synthetic", "geometric_filter", "global_collection",
    "global_energy", "image_pair_scorer", "iou", "kmeans_elbow",
    "link_predict", "load_coarse_matches", "load_masks",
    "load_similarity_table", "mask_to_area", "masks_from_rects",
    "match_area_dmesa", "match_source_areas", "matches_from_json",
    "matches_to_json", "max_flow", "min_cut_solve", "mma", "overlap_ratio",
    "parse_gt", "pose_auc", "pose_error", "preprocess",
    "ransac_fundamental", "relative_pose_error", "run_a2pm", "sample_gmm",
    "sampson_distance", "scene_gt_json", "snap_to_patch_grid",
    "table_scorer", "total_energy", "warp_points", "warp_rect_bbox",
    "write_report", "write_scene",
]
