"""Segmentation-mask ingestion and the candidate-area filter/fuse loop.

Masks arrive either as one binary raster per mask plus a JSON manifest
(format A) or as a single JSON file of column-major uncompressed RLE records
(format B). Both reduce to bounding-box candidate areas that are screened by
minimum size T_s and maximum aspect ratio T_r; screened areas are fused into
their nearest surviving neighbor until the set is stable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import cv2
import numpy as np

from .geometry import Area, ImageDims, fuse

RASTER_EXTS = (".png", ".bmp", ".pgm", ".tif", ".tiff")


class IngestError(Exception):
    """Unreadable or inconsistent mask input."""


@dataclass
class SegmentMask:
    id: str
    bitmap: np.ndarray  # bool, (height, width)

    @property
    def dims(self) -> ImageDims:
        h, w = self.bitmap.shape
        return ImageDims(w, h)


@dataclass
class CandidateArea:
    area: Area
    source: str  # "segmentation" | "fused"


@dataclass
class CandidateSet:
    dims: ImageDims
    areas: list[CandidateArea] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "dims": {"width": self.dims.width, "height": self.dims.height},
            "areas": [{"rect": c.area.to_list(), "source": c.source}
                      for c in self.areas],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CandidateSet":
        dims = ImageDims(int(obj["dims"]["width"]), int(obj["dims"]["height"]))
        areas = [CandidateArea(Area.from_list(e["rect"]), e["source"])
                 for e in obj["areas"]]
        return cls(dims, areas, list(obj.get("warnings", [])))


def decode_rle(counts, size) -> np.ndarray:
    """Column-major uncompressed RLE to a bool bitmap; counts start background."""
    h, w = int(size[0]), int(size[1])
    total = sum(int(c) for c in counts)
    if total != h * w:
        raise IngestError(f"RLE counts sum {total} != {h}x{w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        run = int(run)
        if value:
            flat[pos:pos + run] = True
        pos += run
        value = not value
    return flat.reshape((w, h)).T  # column-major layout


def encode_rle(bitmap: np.ndarray) -> list[int]:
    flat = np.asarray(bitmap, dtype=bool).T.ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:  # counts must start with a (possibly zero) background run
        runs = [0] + runs
    return [int(r) for r in runs]


def _load_raster_mask(path: str) -> np.ndarray:
    img = cv2.imread(path, cv2.IMREAD_GRAYSCALE)
    if img is None:
        raise IngestError(f"unreadable mask raster: {path}")
    return img > 0


def load_masks(path: str) -> tuple[list[SegmentMask], list[str]]:
    """Load masks from a directory (format A) or a JSON file (format B).

    Returns (masks, error_records); masks with zero foreground pixels are
    skipped and reported in the records. Structural problems (missing path,
    malformed files, dims mismatch) raise IngestError.
    """
    if os.path.isdir(path):
        return _load_dir(path)
    if os.path.isfile(path):
        with open(path) as f:
            try:
                obj = json.load(f)
            except json.JSONDecodeError as e:
                raise IngestError(f"malformed JSON in {path}: {e}") from e
        return _load_rle_file(obj, os.path.dirname(path))
    raise IngestError(f"mask path does not exist: {path}")


def _load_dir(path: str) -> tuple[list[SegmentMask], list[str]]:
    manifest = os.path.join(path, "manifest.json")
    declared = None
    if os.path.isfile(manifest):
        with open(manifest) as f:
            try:
                m = json.load(f)
            except json.JSONDecodeError as e:
                raise IngestError(f"malformed manifest: {e}") from e
        try:
            declared = ImageDims(int(m["image"]["width"]), int(m["image"]["height"]))
            names = list(m["masks"])
        except (KeyError, TypeError, ValueError) as e:
            raise IngestError(f"manifest missing fields: {e}") from e
    else:
        names = sorted(n for n in os.listdir(path)
                       if n.lower().endswith(RASTER_EXTS))

    masks, errors = [], []
    for name in names:
        bitmap = _load_raster_mask(os.path.join(path, name))
        if declared is not None:
            h, w = bitmap.shape
            if (w, h) != (declared.width, declared.height):
                raise IngestError(
                    f"mask {name} is {w}x{h}, manifest declares "
                    f"{declared.width}x{declared.height}")
        if not bitmap.any():
            errors.append(f"{name}: zero foreground pixels, skipped")
            continue
        masks.append(SegmentMask(id=name, bitmap=bitmap))
    return masks, errors


def _load_rle_file(obj: dict, base: str) -> tuple[list[SegmentMask], list[str]]:
    try:
        dims = ImageDims(int(obj["image"]["width"]), int(obj["image"]["height"]))
        records = list(obj["masks"])
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"RLE file missing fields: {e}") from e
    masks, errors = [], []
    for i, rec in enumerate(records):
        mask_id = str(rec.get("id", i))
        bitmap = decode_rle(rec["counts"], rec["size"])
        h, w = bitmap.shape
        if (w, h) != (dims.width, dims.height):
            raise IngestError(f"mask {mask_id} size {w}x{h} != declared "
                              f"{dims.width}x{dims.height}")
        if not bitmap.any():
            errors.append(f"{mask_id}: zero foreground pixels, skipped")
            continue
        masks.append(SegmentMask(id=mask_id, bitmap=bitmap))
    return masks, errors


def mask_to_area(m: SegmentMask) -> Area:
    """Tight bounding box of the mask's foreground pixels."""
    ys, xs = np.nonzero(m.bitmap)
    if xs.size == 0:
        raise IngestError(f"mask {m.id} is empty")
    return Area(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def preprocess(areas: list[Area], t_s: int, t_r: float,
               dims: ImageDims) -> CandidateSet:
    """Screen candidates by size/aspect and fuse failures into survivors.

    Each round screens out areas with size < t_s or aspect > t_r and fuses
    every screened area with its nearest survivor (center distance, ties to
    the earliest). Fused envelopes re-enter the screen, so the result contains
    only passing areas. Identical rects are deduplicated up front.
    """
    entries: list[CandidateArea] = []
    seen = set()
    for a in areas:
        key = tuple(a.to_list())
        if key not in seen:
            seen.add(key)
            entries.append(CandidateArea(a, "segmentation"))

    warnings: list[str] = []
    while True:
        passing = [c for c in entries if _passes(c.area, t_s, t_r)]
        failing = [c for c in entries if not _passes(c.area, t_s, t_r)]
        if not failing:
            return CandidateSet(dims, passing, warnings)
        if not passing:
            warnings.append(f"{len(failing)} candidate(s) failed size/aspect "
                            "screening with nothing left to fuse into; dropped")
            return CandidateSet(dims, [], warnings)
        centers = [c.area.center for c in passing]
        for bad in failing:
            cx, cy = bad.area.center
            d2 = [(cx - x) ** 2 + (cy - y) ** 2 for x, y in centers]
            host = passing[int(np.argmin(d2))]
            host.area = fuse(host.area, bad.area)
            host.source = "fused"
        entries = passing


def _passes(a: Area, t_s: int, t_r: float) -> bool:
    return a.size >= t_s and a.aspect <= t_r


def candidates_from_masks(masks: list[SegmentMask], t_s: int, t_r: float,
                          dims: ImageDims) -> CandidateSet:
    return preprocess([mask_to_area(m) for m in masks], t_s, t_r, dims)
