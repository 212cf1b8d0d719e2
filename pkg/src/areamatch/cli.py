"""Command-line entry point for reproducible matching runs.

Every command reads plain JSON, writes canonical JSON (sorted keys, two-space
indent, trailing newline), and derives all randomness from the seed in the
config, so reruns produce identical bytes. Exit codes: 0 success, 1 usage or
configuration error, 2 data error, 3 internal failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import cv2
import numpy as np

from .config import ConfigError, RunConfig
from .dense_match import DenseAreaMatcher, load_coarse_matches
from .geometry import ImageDims, LevelThresholds
from .graph import AreaGraph, build_area_graph
from .graphcut_match import AreaMatch, match_source_areas
from .metrics import (acr, amp, aor, mma, parse_gt, pose_auc, pose_error,
                      write_report)
from .pipeline import (baseline_point_matcher, matches_from_json,
                       matches_to_json, run_a2pm)
from .segments import (CandidateSet, IngestError, candidates_from_masks,
                       load_masks)
from .similarity import (NccSimilarityProvider, SimilarityMatrix,
                         image_pair_scorer, load_similarity_table,
                         table_scorer)
from .synthetic import SceneSpec, gen_synthetic, write_scene


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_json(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _read_json(path: str, kind: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise IngestError(f"cannot read {kind} {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise IngestError(f"malformed {kind} {path}: {e}") from e


def _load_config(path: str | None) -> RunConfig:
    cfg = RunConfig() if path is None else RunConfig.from_file(path)
    cfg.validate()
    return cfg


def _parse_dims(text: str) -> ImageDims:
    try:
        w, h = text.lower().split("x")
        dims = ImageDims(int(w), int(h))
    except ValueError as e:
        raise ConfigError(f"dims must look like 640x480, got {text!r}") from e
    if dims.width <= 0 or dims.height <= 0:
        raise ConfigError(f"dims must be positive, got {text!r}")
    return dims


def _read_image(path: str) -> np.ndarray:
    img = cv2.imread(path, cv2.IMREAD_GRAYSCALE)
    if img is None:
        raise IngestError(f"cannot read image {path}")
    return img


def _load_graph(path: str) -> AreaGraph:
    try:
        return AreaGraph.from_json(_read_json(path, "graph"))
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"malformed graph {path}: {e}") from e


def _build_graph(cands: CandidateSet, cfg: RunConfig) -> AreaGraph:
    return build_area_graph(cands, LevelThresholds(tuple(cfg.TL)),
                            cfg.delta_l, cfg.delta_h)


def _ingest(masks_path: str, dims: ImageDims, cfg: RunConfig) -> CandidateSet:
    masks, errors = load_masks(masks_path)
    for m in masks:
        if m.dims != dims:
            raise IngestError(
                f"mask {m.id} is {m.dims.width}x{m.dims.height}, "
                f"expected {dims.width}x{dims.height}")
    cands = candidates_from_masks(masks, cfg.T_s, cfg.T_r, dims)
    cands.warnings.extend(errors)
    return cands


def cmd_ingest(args) -> int:
    cfg = _load_config(args.config)
    cands = _ingest(args.masks, _parse_dims(args.dims), cfg)
    _write_json(cands.to_json(), args.out)
    return 0


def cmd_build_graph(args) -> int:
    cfg = _load_config(args.config)
    try:
        cands = CandidateSet.from_json(_read_json(args.candidates,
                                                  "candidate set"))
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"malformed candidate set: {e}") from e
    _write_json(_build_graph(cands, cfg).to_json(), args.out)
    return 0


def _mesa_matches(g0, g1, img0, img1, cfg, sim_table=None) -> list:
    if sim_table is not None:
        scorer = table_scorer(load_similarity_table(sim_table))
    else:
        scorer = image_pair_scorer(g0, g1, img0, img1,
                                   NccSimilarityProvider())
    ms = SimilarityMatrix(g0, g1, scorer, cfg.T_as)
    return match_source_areas(g0, g1, ms, cfg)


def _dmesa_matches(g0, img0, img1, cfg, coarse_file=None) -> list:
    coarse = None if coarse_file is None else load_coarse_matches(coarse_file)
    matcher = DenseAreaMatcher(img0, img1, cfg, coarse=coarse)
    sources = [(n.id, n.area) for n in g0.source_nodes(cfg.l_star)]
    return matcher.match_sources(sources)


def cmd_match_areas(args) -> int:
    cfg = _load_config(args.config)
    g0 = _load_graph(args.graph0)
    img0 = _read_image(args.img0)
    img1 = _read_image(args.img1)
    if args.method == "mesa":
        if args.graph1 is None:
            raise ConfigError("--graph1 is required for method mesa")
        g1 = _load_graph(args.graph1)
        matches = _mesa_matches(g0, g1, img0, img1, cfg, args.sim_table)
    else:
        matches = _dmesa_matches(g0, img0, img1, cfg, args.coarse)
    _write_json({"area_matches": [m.to_json() for m in matches]}, args.out)
    return 0


def cmd_run_pipeline(args) -> int:
    cfg = _load_config(args.config)
    img0 = _read_image(args.img0)
    img1 = _read_image(args.img1)
    dims0 = ImageDims(img0.shape[1], img0.shape[0])
    dims1 = ImageDims(img1.shape[1], img1.shape[0])
    warnings: list = []

    area_matches: list = []
    if args.masks0 and args.masks1:
        g0 = _build_graph(_ingest(args.masks0, dims0, cfg), cfg)
        g1 = _build_graph(_ingest(args.masks1, dims1, cfg), cfg)
        if cfg.method == "mesa":
            area_matches = _mesa_matches(g0, g1, img0, img1, cfg)
        else:
            area_matches = _dmesa_matches(g0, img0, img1, cfg)
    elif args.masks0 or args.masks1:
        raise ConfigError("provide both --masks0 and --masks1 or neither")

    points = run_a2pm(img0, img1, area_matches, baseline_point_matcher, cfg,
                      warnings=warnings)
    doc = {"area_matches": [m.to_json() for m in area_matches],
           "warnings": warnings}
    doc.update(matches_to_json(points))
    if args.gt:
        gt_doc = _read_json(args.gt, "ground truth")
        doc["metrics"] = _homography_metrics(area_matches, points, gt_doc,
                                             dims0)
    _write_json(doc, args.out)
    return 0


def _homography_metrics(area_matches, points, gt_doc, dims0) -> dict:
    try:
        h, dims1 = parse_gt(gt_doc)
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"bad ground truth: {e}") from e
    aors = [aor(m, h, dims1) for m in area_matches]
    amp_pct, amp_empty = amp(area_matches, h, dims1)
    pct, n_eval, n_excl = mma(points, h, dims1)
    return {
        "area": {
            "aor_per_match": aors,
            "aor_mean": float(np.mean(aors)) if aors else 0.0,
            "amp": amp_pct,
            "amp_empty": amp_empty,
            "acr": acr(area_matches, dims0),
        },
        "points": {
            "mma": {f"{t:g}": v for t, v in pct.items()},
            "n_evaluated": n_eval,
            "n_excluded": n_excl,
        },
    }


def _pose_metrics(points, gt_doc) -> dict:
    try:
        r = np.array(gt_doc["R"], dtype=float)
        t = np.array(gt_doc["t"], dtype=float)
        k0 = np.array(gt_doc["K0"], dtype=float)
        k1 = np.array(gt_doc.get("K1", gt_doc["K0"]), dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"bad pose ground truth: {e}") from e
    if not np.allclose(r @ r.T, np.eye(3), atol=1e-6) \
            or np.linalg.det(r) < 0:
        raise IngestError("pose rotation must be orthonormal with det +1")
    err = pose_error(points, r, t, k0, k1)
    auc = pose_auc([err])
    return {"pose": {"error_deg": err,
                     "auc": {f"{th:g}": v for th, v in auc.items()}}}


def cmd_eval(args) -> int:
    doc = _read_json(args.matches, "matches")
    gt_doc = _read_json(args.gt, "ground truth")
    try:
        area_matches = [AreaMatch.from_json(m)
                        for m in doc.get("area_matches", [])]
        points = matches_from_json(doc) if "matches" in doc else []
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"malformed matches: {e}") from e

    if gt_doc.get("type") == "pose":
        report = _pose_metrics(points, gt_doc)
    else:
        d0 = gt_doc.get("dims0", gt_doc.get("dims1"))
        if d0 is None:
            raise IngestError("ground truth missing dims0")
        dims0 = ImageDims(int(d0["width"]), int(d0["height"]))
        report = _homography_metrics(area_matches, points, gt_doc, dims0)
    report["counts"] = {"area_matches": len(area_matches),
                        "point_matches": len(points)}
    write_report(report, args.report)
    return 0


def cmd_gen_synthetic(args) -> int:
    doc = _read_json(args.spec, "scene spec")
    seed = int(doc.pop("seed", 0))
    try:
        spec = SceneSpec.from_json(doc)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad scene spec: {e}") from e
    scenes = gen_synthetic(seed, spec)
    os.makedirs(args.out, exist_ok=True)
    for scene in scenes:
        write_scene(scene, os.path.join(args.out, f"scene_{scene.index:03d}"))
    _write_json({"seed": seed, "spec": doc,
                 "scenes": [f"scene_{s.index:03d}" for s in scenes]},
                os.path.join(args.out, "corpus.json"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="areamatch",
                     description="Semantic-area matching toolkit")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("ingest",
                       help="screen segmentation masks into area candidates")
    p.add_argument("--masks", required=True)
    p.add_argument("--dims", required=True, help="image size as WxH")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-graph",
                       help="build the area graph from candidates")
    p.add_argument("--candidates", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("match-areas",
                       help="match source areas between two images")
    p.add_argument("--method", required=True, choices=("mesa", "dmesa"))
    p.add_argument("--graph0", required=True)
    p.add_argument("--graph1")
    p.add_argument("--img0", required=True)
    p.add_argument("--img1", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--sim-table", dest="sim_table",
                   help="similarity injection file (mesa)")
    p.add_argument("--coarse", help="coarse match injection file (dmesa)")
    p.set_defaults(func=cmd_match_areas)

    p = sub.add_parser("run-pipeline",
                       help="full area-then-point matching run")
    p.add_argument("--img0", required=True)
    p.add_argument("--img1", required=True)
    p.add_argument("--masks0")
    p.add_argument("--masks1")
    p.add_argument("--config")
    p.add_argument("--gt", help="optional ground truth for inline metrics")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run_pipeline)

    p = sub.add_parser("eval",
                       help="score a match file against ground truth")
    p.add_argument("--matches", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-synthetic",
                       help="generate a seeded synthetic scene corpus")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except IngestError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # anything else is an internal failure
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
