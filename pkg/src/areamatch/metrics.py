"""Accuracy metrics for area matches, point matches, and two-view pose.

Area accuracy reprojects the source rectangle through the ground-truth warp
and compares bounding boxes; point accuracy thresholds reprojection error;
pose accuracy integrates the cumulative error curve exactly rather than
histogramming it. All ground truth on this desk scale is a homography or a
calibrated (R, t) pair.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .epipolar import relative_pose_error
from .geometry import ImageDims
from .synthetic import warp_points, warp_rect_bbox

AMP_TAU = 0.6
MMA_THRESHOLDS = (3.0, 5.0, 7.0)
AUC_THRESHOLDS = (5.0, 10.0, 20.0)


def _box_iou(a, b) -> float:
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = ((a[2] - a[0]) * (a[3] - a[1])
             + (b[2] - b[0]) * (b[3] - b[1]) - inter)
    return inter / union if union > 0 else 0.0


def aor(m, h: np.ndarray, dims1: ImageDims | None = None) -> float:
    """Reprojected box overlap of one area match under a homography."""
    box = warp_rect_bbox(h, m.source)
    if dims1 is not None:
        if box[2] <= 0 or box[3] <= 0 or box[0] >= dims1.width \
                or box[1] >= dims1.height:
            return 0.0
    tgt = (float(m.target.x_min), float(m.target.y_min),
           float(m.target.x_max), float(m.target.y_max))
    return _box_iou(box, tgt)


def amp(matches, h: np.ndarray, dims1: ImageDims | None = None,
        tau: float = AMP_TAU):
    """(percentage of matches with aor strictly above tau, empty flag)."""
    if not matches:
        return 0.0, True
    good = sum(1 for m in matches if aor(m, h, dims1) > tau)
    return 100.0 * good / len(matches), False


def acr(matches, dims: ImageDims) -> float:
    """Pixel coverage of the matched source areas over image 0, percent."""
    cov = np.zeros((dims.height, dims.width), dtype=bool)
    for m in matches:
        x0, y0 = max(0, m.source.x_min), max(0, m.source.y_min)
        x1 = min(dims.width, m.source.x_max)
        y1 = min(dims.height, m.source.y_max)
        if x0 < x1 and y0 < y1:
            cov[y0:y1, x0:x1] = True
    return 100.0 * float(cov.mean())


def reprojection_errors(point_matches, h: np.ndarray, dims1: ImageDims):
    """(errors for defined matches, n_excluded).

    A match is excluded when its ground-truth reprojection leaves image 1
    (or the warp degenerates), since no correct answer exists for it.
    """
    errors, excluded = [], 0
    hom = np.asarray(h, dtype=float)
    for m in point_matches:
        p = np.array([[m.p0[0], m.p0[1], 1.0]]) @ hom.T
        w = p[0, 2]
        if abs(w) < 1e-12:
            excluded += 1
            continue
        q = p[0, :2] / w
        if not (0 <= q[0] < dims1.width and 0 <= q[1] < dims1.height):
            excluded += 1
            continue
        errors.append(float(np.hypot(q[0] - m.p1[0], q[1] - m.p1[1])))
    return errors, excluded


def mma(point_matches, h: np.ndarray, dims1: ImageDims,
        thresholds=MMA_THRESHOLDS):
    """({threshold: percent}, n_evaluated, n_excluded)."""
    errors, excluded = reprojection_errors(point_matches, h, dims1)
    out = {}
    for t in thresholds:
        if errors:
            out[t] = 100.0 * sum(1 for e in errors if e <= t) / len(errors)
        else:
            out[t] = 0.0
    return out, len(errors), excluded


def pose_auc(errors, thresholds=AUC_THRESHOLDS) -> dict:
    """Exact area under the cumulative pose-error curve, percent per threshold.

    The recall curve is a step function; integrating it over [0, t] gives
    sum(t - e_i) / (n * t) over the errors below t.
    """
    errs = np.asarray(list(errors), dtype=float)
    out = {}
    for t in thresholds:
        if errs.size == 0:
            out[t] = 0.0
            continue
        kept = errs[errs <= t]
        out[t] = 100.0 * float((t - kept).sum()) / (errs.size * t)
    return out


def pose_error(point_matches, r_gt, t_gt, k0, k1, seed: int = 0) -> float:
    """Angular pose error of one pair's matches, 180 on failure."""
    if not point_matches:
        return 180.0
    p0 = np.array([m.p0 for m in point_matches], dtype=float)
    p1 = np.array([m.p1 for m in point_matches], dtype=float)
    return relative_pose_error(p0, p1, k0, k1, r_gt, t_gt, seed=seed)


def parse_gt(doc: dict):
    """(H, dims1) from a ground-truth document; homography type only."""
    if doc.get("type") != "homography":
        raise ValueError(f"unsupported ground truth type {doc.get('type')!r}")
    h = np.array(doc["H"], dtype=float)
    if h.shape != (3, 3) or abs(np.linalg.det(h)) < 1e-12:
        raise ValueError("ground-truth homography must be invertible 3x3")
    d = doc["dims1"]
    return h, ImageDims(int(d["width"]), int(d["height"]))


def _table_lines(doc, indent=0):
    lines = []
    for key in doc:
        val = doc[key]
        pad = "  " * indent
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_table_lines(val, indent + 1))
        elif isinstance(val, float):
            lines.append(f"{pad}{key:<24}{val:.4f}")
        elif isinstance(val, list):
            lines.append(f"{pad}{key:<24}{json.dumps(val)}")
        else:
            lines.append(f"{pad}{key:<24}{val}")
    return lines


def write_report(report: dict, path: str) -> None:
    """Canonical JSON report plus a plain-text table next to it."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    companion = os.path.splitext(path)[0] + ".txt"
    if companion == path:
        companion = path + ".table.txt"
    with open(companion, "w", encoding="utf-8") as f:
        f.write("\n".join(_table_lines(report)) + "\n")
