"""Seeded synthetic scenes with exact ground truth.

Scenes are textured image pairs related by a known warp, with rectangular
segment masks visible in both views. Everything derives from
np.random.default_rng([seed, scene_index]), so a seed pins the whole corpus
byte for byte. A separate generator produces calibrated two-view pose scenes
from projected 3-D points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import cv2
import numpy as np
from scipy import ndimage
from scipy.spatial.transform import Rotation

from .geometry import Area, ImageDims
from .segments import SegmentMask, encode_rle

MARGIN = 96
LEVEL_SIDES = {0: (80, 128), 1: (130, 254), 2: (256, 380)}
WARP_FAMILIES = ("identity", "translation", "similarity", "homography")


@dataclass(frozen=True)
class SceneSpec:
    n_scenes: int
    warp_family: str
    texture_density: float = 1.0
    n_segments: int = 4
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.warp_family not in WARP_FAMILIES:
            raise ValueError(f"unknown warp family {self.warp_family!r}")
        if self.n_scenes < 1 or self.n_segments < 1:
            raise ValueError("n_scenes and n_segments must be positive")

    @classmethod
    def from_json(cls, doc: dict) -> "SceneSpec":
        return cls(**doc)


@dataclass
class SyntheticScene:
    index: int
    warp_family: str
    img0: np.ndarray
    img1: np.ndarray
    h: np.ndarray                      # 3x3, image-0 -> image-1 points
    rects0: list
    rects1: list
    correspondences: list = field(default_factory=list)

    @property
    def dims(self) -> ImageDims:
        return ImageDims(self.img0.shape[1], self.img0.shape[0])


def _texture_canvas(rng: np.random.Generator, h: int, w: int,
                    density: float) -> np.ndarray:
    fine = ndimage.gaussian_filter(rng.standard_normal((h, w)), 1.2)
    broad = ndimage.gaussian_filter(rng.standard_normal((h, w)), 12.0)
    img = fine / fine.std() + 1.5 * broad / broad.std()
    for _ in range(int(40 * density)):
        cy = rng.uniform(0, h)
        cx = rng.uniform(0, w)
        r = rng.uniform(8, 40)
        amp = rng.uniform(1.0, 2.5) * rng.choice([-1.0, 1.0])
        y0, y1 = max(0, int(cy - 3 * r)), min(h, int(cy + 3 * r) + 1)
        x0, x1 = max(0, int(cx - 3 * r)), min(w, int(cx + 3 * r) + 1)
        ys = np.arange(y0, y1) - cy
        xs = np.arange(x0, x1) - cx
        bump = np.exp(-(ys[:, None] ** 2 + xs[None, :] ** 2) / (2 * r * r))
        img[y0:y1, x0:x1] += amp * bump
    lo, hi = img.min(), img.max()
    return ((img - lo) / (hi - lo) * 255.0).astype(np.uint8)


def _sample_warp(rng: np.random.Generator, family: str,
                 dims: ImageDims) -> np.ndarray:
    if family == "identity":
        return np.eye(3)
    if family == "translation":
        # Shifts in units of the coarse-match patch stride; the stand-in
        # grid matcher has no sub-patch interpolation, so off-stride
        # shifts would only measure its granularity, not the matching.
        dx, dy = 8 * rng.integers(-8, 9, size=2)
        h = np.eye(3)
        h[0, 2], h[1, 2] = float(dx), float(dy)
        return h
    cx, cy = dims.width / 2.0, dims.height / 2.0
    if family == "similarity":
        s = rng.uniform(0.85, 1.2)
        th = rng.uniform(-0.35, 0.35)
        tx, ty = rng.uniform(-24, 24, size=2)
        persp = (0.0, 0.0)
    else:  # homography: strong zoom plus mild rotation and perspective
        s = rng.uniform(2.0, 2.4)
        th = rng.uniform(-0.05, 0.05)
        tx, ty = rng.uniform(-16, 16, size=2)
        persp = tuple(rng.uniform(-5e-5, 5e-5, size=2))
    rot = np.array([[s * np.cos(th), -s * np.sin(th), 0.0],
                    [s * np.sin(th), s * np.cos(th), 0.0],
                    [persp[0], persp[1], 1.0]])
    center = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
    uncenter = np.array([[1.0, 0.0, cx + tx], [0.0, 1.0, cy + ty],
                         [0.0, 0.0, 1.0]])
    return uncenter @ rot @ center


def warp_points(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    hom = np.column_stack([pts, np.ones(len(pts))]) @ h.T
    return hom[:, :2] / hom[:, 2:3]


def warp_rect_bbox(h: np.ndarray, rect: Area) -> tuple:
    """Float bounding box (x0, y0, x1, y1) of the warped rect corners."""
    corners = np.array([[rect.x_min, rect.y_min], [rect.x_max, rect.y_min],
                        [rect.x_max, rect.y_max], [rect.x_min, rect.y_max]],
                       dtype=float)
    w = warp_points(h, corners)
    return (float(w[:, 0].min()), float(w[:, 1].min()),
            float(w[:, 0].max()), float(w[:, 1].max()))


def _sample_rects(rng: np.random.Generator, h: np.ndarray, dims: ImageDims,
                  n: int, levels) -> tuple:
    rects0, rects1 = [], []
    for _ in range(n):
        placed = False
        for _ in range(200):
            level = int(rng.choice(levels))
            lo, hi = LEVEL_SIDES[level]
            w = int(rng.integers(lo, hi + 1))
            hh = int(rng.integers(lo, hi + 1))
            if w > dims.width or hh > dims.height:
                continue
            x = int(rng.integers(0, dims.width - w + 1))
            y = int(rng.integers(0, dims.height - hh + 1))
            r0 = Area(x, y, x + w, y + hh)
            bx0, by0, bx1, by1 = warp_rect_bbox(h, r0)
            r1 = Area(int(np.floor(bx0)), int(np.floor(by0)),
                      int(np.ceil(bx1)), int(np.ceil(by1)))
            # 8-px margin keeps patch-grid-snapped crops in frame after
            # warping.
            if r1.x_min < 8 or r1.y_min < 8 or r1.x_max > dims.width - 8 \
                    or r1.y_max > dims.height - 8:
                continue
            rects0.append(r0)
            rects1.append(r1)
            placed = True
            break
        if not placed:
            continue  # strong warps can make a slot impossible; skip it
    return rects0, rects1


def gen_synthetic(seed: int, spec: SceneSpec) -> list:
    scenes = []
    for i in range(spec.n_scenes):
        rng = np.random.default_rng([seed, i])
        dims = ImageDims(spec.width, spec.height)
        canvas = _texture_canvas(rng, dims.height + 2 * MARGIN,
                                 dims.width + 2 * MARGIN,
                                 spec.texture_density)
        img0 = canvas[MARGIN:MARGIN + dims.height,
                      MARGIN:MARGIN + dims.width].copy()
        h = _sample_warp(rng, spec.warp_family, dims)
        if spec.warp_family == "identity":
            img1 = img0.copy()
        elif spec.warp_family == "translation":
            dx, dy = int(h[0, 2]), int(h[1, 2])
            img1 = canvas[MARGIN - dy:MARGIN - dy + dims.height,
                          MARGIN - dx:MARGIN - dx + dims.width].copy()
        else:
            shift = np.array([[1.0, 0.0, -MARGIN], [0.0, 1.0, -MARGIN],
                              [0.0, 0.0, 1.0]])
            img1 = cv2.warpPerspective(canvas, h @ shift,
                                       (dims.width, dims.height),
                                       flags=cv2.INTER_LINEAR)
        levels = (0, 1) if spec.warp_family == "homography" else (0, 1, 2)
        rects0, rects1 = _sample_rects(rng, h, dims, spec.n_segments, levels)
        scenes.append(SyntheticScene(
            i, spec.warp_family, img0, img1, h, rects0, rects1,
            [(k, k) for k in range(len(rects0))]))
    return scenes


def masks_from_rects(rects, dims: ImageDims) -> list:
    out = []
    for i, r in enumerate(rects):
        bitmap = np.zeros((dims.height, dims.width), dtype=bool)
        bitmap[r.y_min:r.y_max, r.x_min:r.x_max] = True
        out.append(SegmentMask(str(i), bitmap))
    return out


def _masks_json(rects, dims: ImageDims) -> dict:
    masks = []
    for m in masks_from_rects(rects, dims):
        masks.append({"id": m.id, "size": [dims.height, dims.width],
                      "counts": encode_rle(m.bitmap)})
    return {"image": {"width": dims.width, "height": dims.height},
            "masks": masks}


def scene_gt_json(scene: SyntheticScene) -> dict:
    return {
        "type": "homography",
        "warp_family": scene.warp_family,
        "H": [[float(v) for v in row] for row in scene.h],
        "dims0": {"width": scene.dims.width, "height": scene.dims.height},
        "dims1": {"width": scene.img1.shape[1],
                  "height": scene.img1.shape[0]},
        "rects0": [r.to_list() for r in scene.rects0],
        "rects1": [r.to_list() for r in scene.rects1],
        "correspondences": [list(c) for c in scene.correspondences],
    }


def write_scene(scene: SyntheticScene, out_dir) -> None:
    import os
    os.makedirs(out_dir, exist_ok=True)
    cv2.imwrite(os.path.join(out_dir, "img0.png"), scene.img0)
    cv2.imwrite(os.path.join(out_dir, "img1.png"), scene.img1)
    dims = scene.dims
    for name, doc in (("gt.json", scene_gt_json(scene)),
                      ("masks0.json", _masks_json(scene.rects0, dims)),
                      ("masks1.json", _masks_json(scene.rects1, dims))):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")


@dataclass
class PoseScene:
    p0: np.ndarray
    p1: np.ndarray
    r: np.ndarray       # x1 = r @ x0 + t
    t: np.ndarray       # unit direction
    k: np.ndarray


def gen_pose_scene(seed: int, n_points: int = 200,
                   noise: float = 0.0) -> PoseScene:
    rng = np.random.default_rng(seed)
    k = np.array([[480.0, 0.0, 320.0], [0.0, 480.0, 240.0], [0.0, 0.0, 1.0]])
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = np.radians(rng.uniform(5.0, 25.0))
    r = Rotation.from_rotvec(axis * angle).as_matrix()
    t = rng.normal(size=3)
    t = t / np.linalg.norm(t) * rng.uniform(0.5, 1.0)

    p0, p1 = [], []
    while len(p0) < n_points:
        u = rng.uniform(0, 640)
        v = rng.uniform(0, 480)
        z = rng.uniform(3.0, 9.0)
        x0 = np.array([(u - k[0, 2]) / k[0, 0] * z,
                       (v - k[1, 2]) / k[1, 1] * z, z])
        x1 = r @ x0 + t
        if x1[2] <= 0.1:
            continue
        q = k @ (x1 / x1[2])
        if not (0 <= q[0] < 640 and 0 <= q[1] < 480):
            continue
        p0.append([u, v])
        p1.append(q[:2])
    p0 = np.array(p0)
    p1 = np.array(p1)
    if noise > 0:
        p0 = p0 + rng.normal(0, noise, p0.shape)
        p1 = p1 + rng.normal(0, noise, p1.shape)
    return PoseScene(p0, p1, r, t / np.linalg.norm(t), k)
