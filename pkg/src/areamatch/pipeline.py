"""Area-to-point matching: crop matched area pairs, run a point matcher
inside each, and fuse the remapped results.

Crops follow the fixed resolution policy: expand each area to the target
aspect ratio, cut it from the full-resolution image, and rescale to the point
matcher's input square, so the matcher always sees area content at its native
working resolution. Fused matches are deduplicated on a 1 px grid, filtered
by a robust epipolar check, and topped up with full-image matches when the
matched areas leave too much of the frame uncovered.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .dense_match import baseline_coarse_match
from .epipolar import ransac_fundamental
from .geometry import Area, ExpansionError, ImageDims, expand_to_aspect, \
    full_image_area
from .graphcut_match import AreaMatch
from .similarity import to_gray


@dataclass(frozen=True)
class PointMatch:
    p0: tuple
    p1: tuple
    score: float
    provenance: str

    def to_json(self) -> dict:
        return {"p0": [self.p0[0], self.p0[1]],
                "p1": [self.p1[0], self.p1[1]],
                "score": self.score, "provenance": self.provenance}

    @classmethod
    def from_json(cls, doc: dict) -> "PointMatch":
        return cls(tuple(float(v) for v in doc["p0"]),
                   tuple(float(v) for v in doc["p1"]),
                   float(doc["score"]), str(doc["provenance"]))


@dataclass(frozen=True)
class CropTransform:
    """Affine map from crop-local to full-image coordinates."""

    x_off: float
    y_off: float
    sx: float
    sy: float
    letterboxed: bool = False

    def to_full(self, p) -> tuple:
        return (self.x_off + p[0] * self.sx, self.y_off + p[1] * self.sy)

    def to_local(self, p) -> tuple:
        return ((p[0] - self.x_off) / self.sx, (p[1] - self.y_off) / self.sy)


def baseline_point_matcher(img_a: np.ndarray, img_b: np.ndarray) -> list:
    """Patch-center correspondences from the coarse NCC matcher."""
    return [PointMatch(m.src_center, m.tgt_center, m.confidence, "local")
            for m in baseline_coarse_match(img_a, img_b)]


def _crop_one(img: np.ndarray, area: Area, cfg, warnings=None):
    dims = ImageDims(img.shape[1], img.shape[0])
    side = cfg.pm_input_side
    try:
        a = expand_to_aspect(area, cfg.r_a, dims)
        crop = img[a.y_min:a.y_max, a.x_min:a.x_max]
        tf = CropTransform(float(a.x_min), float(a.y_min),
                           a.width / side, a.height / side)
    except ExpansionError:
        # area cannot reach the aspect inside the frame: letterbox the whole
        # image into a square instead
        if warnings is not None:
            warnings.append(f"letterbox fallback for {area.to_list()}")
        square = max(dims.width, dims.height)
        canvas = np.zeros((square, square), dtype=img.dtype)
        canvas[:dims.height, :dims.width] = img
        crop = canvas
        tf = CropTransform(0.0, 0.0, square / side, square / side,
                           letterboxed=True)
    return cv2.resize(crop, (side, side),
                      interpolation=cv2.INTER_AREA), tf


def crop_area_pair(img0: np.ndarray, img1: np.ndarray, m: AreaMatch, cfg,
                   warnings=None):
    crop_a, tf_a = _crop_one(to_gray(img0), m.source, cfg, warnings)
    crop_b, tf_b = _crop_one(to_gray(img1), m.target, cfg, warnings)
    return crop_a, crop_b, tf_a, tf_b


def _dedupe(matches: list) -> list:
    """One match per 1 px grid cell pair; highest score wins, first on ties."""
    best = {}
    for m in matches:
        key = (int(m.p0[0]), int(m.p0[1]), int(m.p1[0]), int(m.p1[1]))
        cur = best.get(key)
        if cur is None or m.score > cur.score:
            best[key] = m
    return list(best.values())


def geometric_filter(matches: list, phi: float, seed: int = 0,
                     warnings=None) -> list:
    if len(matches) < 8 or not np.isfinite(phi):
        return matches
    p0 = np.array([m.p0 for m in matches])
    p1 = np.array([m.p1 for m in matches])
    f, mask = ransac_fundamental(p0, p1, phi, seed=seed)
    if f is None:
        if warnings is not None:
            warnings.append("geometric filter degenerate, passing through")
        return matches
    return [m for m, keep in zip(matches, mask) if keep]


def coverage_mask(area_matches: list, dims: ImageDims) -> np.ndarray:
    """Union raster of matched source areas over image 0."""
    cov = np.zeros((dims.height, dims.width), dtype=bool)
    for m in area_matches:
        x0, y0 = max(0, m.source.x_min), max(0, m.source.y_min)
        x1 = min(dims.width, m.source.x_max)
        y1 = min(dims.height, m.source.y_max)
        if x0 < x1 and y0 < y1:
            cov[y0:y1, x0:x1] = True
    return cov


def _in_frame(p, dims: ImageDims) -> bool:
    return 0.0 <= p[0] < dims.width and 0.0 <= p[1] < dims.height


def global_collection(img0, img1, area_matches, matches, pm_provider, cfg,
                      warnings=None) -> list:
    dims0 = ImageDims(img0.shape[1], img0.shape[0])
    dims1 = ImageDims(img1.shape[1], img1.shape[0])
    cov = coverage_mask(area_matches, dims0)
    if cov.mean() >= cfg.occupancy_ratio:
        return matches
    full = AreaMatch(full_image_area(dims0), full_image_area(dims1),
                     0.0, "global")
    crop_a, crop_b, tf_a, tf_b = crop_area_pair(img0, img1, full, cfg,
                                                warnings)
    out = list(matches)
    for lm in pm_provider(crop_a, crop_b):
        f0 = tf_a.to_full(lm.p0)
        f1 = tf_b.to_full(lm.p1)
        if not (_in_frame(f0, dims0) and _in_frame(f1, dims1)):
            continue
        if cov[int(f0[1]), int(f0[0])]:
            continue
        out.append(PointMatch(f0, f1, lm.score, "global"))
    return out


def run_a2pm(img0, img1, area_matches, pm_provider, cfg,
             warnings=None) -> list:
    dims0 = ImageDims(img0.shape[1], img0.shape[0])
    dims1 = ImageDims(img1.shape[1], img1.shape[0])
    fused = []
    for idx, m in enumerate(area_matches):
        try:
            crop_a, crop_b, tf_a, tf_b = crop_area_pair(img0, img1, m, cfg,
                                                        warnings)
            local = pm_provider(crop_a, crop_b)
        except Exception as exc:  # a failed pair must not sink the rest
            if warnings is not None:
                warnings.append(f"area pair {idx} failed: {exc}")
            continue
        for lm in local:
            f0 = tf_a.to_full(lm.p0)
            f1 = tf_b.to_full(lm.p1)
            if _in_frame(f0, dims0) and _in_frame(f1, dims1):
                fused.append(PointMatch(f0, f1, lm.score, str(idx)))
    fused = _dedupe(fused)
    fused = geometric_filter(fused, cfg.phi, seed=cfg.seed, warnings=warnings)
    return global_collection(img0, img1, area_matches, fused, pm_provider,
                             cfg, warnings)


def matches_to_json(matches: list) -> dict:
    return {"matches": [m.to_json() for m in matches]}


def matches_from_json(doc: dict) -> list:
    return [PointMatch.from_json(m) for m in doc["matches"]]
