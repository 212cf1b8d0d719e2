"""Two-view epipolar estimation: fundamental and essential matrices.

Everything here is deterministic: the consensus loops draw their samples from
a generator seeded by the caller, so identical inputs give identical models.
The solvers are plain normalized 8-point; no iterative polishing.
"""

from __future__ import annotations

import numpy as np

RANSAC_ITERS = 1000


def _normalize(pts: np.ndarray):
    """Hartley conditioning: centroid at origin, mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    dist = np.linalg.norm(pts - centroid, axis=1).mean()
    if dist < 1e-12:
        raise np.linalg.LinAlgError("degenerate point set")
    s = np.sqrt(2.0) / dist
    t = np.array([[s, 0.0, -s * centroid[0]],
                  [0.0, s, -s * centroid[1]],
                  [0.0, 0.0, 1.0]])
    return (pts - centroid) * s, t


def eight_point(p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """Fundamental matrix with p1^T F p0 = 0, rank-2 enforced."""
    if p0.shape[0] < 8:
        raise ValueError("need at least 8 correspondences")
    q0, t0 = _normalize(p0)
    q1, t1 = _normalize(p1)
    x0, y0 = q0[:, 0], q0[:, 1]
    x1, y1 = q1[:, 0], q1[:, 1]
    a = np.stack([x1 * x0, x1 * y0, x1, y1 * x0, y1 * y0, y1,
                  x0, y0, np.ones_like(x0)], axis=1)
    _, _, vt = np.linalg.svd(a)
    f = vt[-1].reshape(3, 3)
    u, s, vt = np.linalg.svd(f)
    f = u @ np.diag([s[0], s[1], 0.0]) @ vt
    f = t1.T @ f @ t0
    norm = np.linalg.norm(f)
    if norm < 1e-12:
        raise np.linalg.LinAlgError("null fundamental matrix")
    return f / norm


def sampson_distance(f: np.ndarray, p0: np.ndarray,
                     p1: np.ndarray) -> np.ndarray:
    h0 = np.column_stack([p0, np.ones(len(p0))])
    h1 = np.column_stack([p1, np.ones(len(p1))])
    fl0 = h0 @ f.T
    fl1 = h1 @ f
    num = np.einsum("ni,ni->n", h1, fl0) ** 2
    den = fl0[:, 0] ** 2 + fl0[:, 1] ** 2 + fl1[:, 0] ** 2 + fl1[:, 1] ** 2
    return num / np.maximum(den, 1e-12)


def ransac_fundamental(p0: np.ndarray, p1: np.ndarray, thresh: float,
                       seed: int = 0, iters: int = RANSAC_ITERS):
    """(F, inlier mask) by sampled 8-point consensus, or (None, None)."""
    n = p0.shape[0]
    if n < 8:
        return None, None
    rng = np.random.default_rng(seed)
    best_count, best_mask = 0, None
    for _ in range(iters):
        idx = rng.choice(n, size=8, replace=False)
        try:
            f = eight_point(p0[idx], p1[idx])
        except np.linalg.LinAlgError:
            continue
        mask = sampson_distance(f, p0, p1) <= thresh * thresh
        count = int(mask.sum())
        if count > best_count:
            best_count, best_mask = count, mask
    if best_mask is None or best_count < 8:
        return None, None
    try:
        f = eight_point(p0[best_mask], p1[best_mask])
    except np.linalg.LinAlgError:
        return None, None
    return f, sampson_distance(f, p0, p1) <= thresh * thresh


def estimate_essential(p0: np.ndarray, p1: np.ndarray, k0: np.ndarray,
                       k1: np.ndarray, px_thresh: float = 1.0,
                       seed: int = 0):
    """Essential matrix from pixel correspondences, or (None, None).

    Points are moved to normalized camera coordinates first; the pixel
    threshold is divided by the mean focal length to follow them.
    """
    x0 = (p0 - k0[:2, 2]) / np.array([k0[0, 0], k0[1, 1]])
    x1 = (p1 - k1[:2, 2]) / np.array([k1[0, 0], k1[1, 1]])
    focal = (k0[0, 0] + k0[1, 1] + k1[0, 0] + k1[1, 1]) / 4.0
    e, mask = ransac_fundamental(x0, x1, px_thresh / focal, seed=seed)
    if e is None:
        return None, None
    u, _, vt = np.linalg.svd(e)
    e = u @ np.diag([1.0, 1.0, 0.0]) @ vt
    return e, (x0, x1, mask)


def _triangulate(r, t, x0, x1):
    """Linear triangulation in normalized coordinates, depths in both frames."""
    depths0, depths1 = [], []
    p0 = np.hstack([np.eye(3), np.zeros((3, 1))])
    p1 = np.hstack([r, t.reshape(3, 1)])
    for a, b in zip(x0, x1):
        m = np.stack([a[0] * p0[2] - p0[0], a[1] * p0[2] - p0[1],
                      b[0] * p1[2] - p1[0], b[1] * p1[2] - p1[1]])
        _, _, vt = np.linalg.svd(m)
        x = vt[-1]
        if abs(x[3]) < 1e-12:
            depths0.append(0.0)
            depths1.append(0.0)
            continue
        x = x[:3] / x[3]
        depths0.append(x[2])
        depths1.append((r @ x + t)[2])
    return np.array(depths0), np.array(depths1)


def decompose_essential(e: np.ndarray, x0: np.ndarray, x1: np.ndarray):
    """(R, unit t) resolving the four-fold ambiguity by depth voting."""
    u, _, vt = np.linalg.svd(e)
    if np.linalg.det(u) < 0:
        u = -u
    if np.linalg.det(vt) < 0:
        vt = -vt
    w = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    t = u[:, 2]
    # vote on a subset; ambiguity resolution needs no more
    take = slice(0, min(len(x0), 50))
    best, best_votes = None, -1
    for r in (u @ w @ vt, u @ w.T @ vt):
        for tt in (t, -t):
            d0, d1 = _triangulate(r, tt, x0[take], x1[take])
            votes = int(((d0 > 0) & (d1 > 0)).sum())
            if votes > best_votes:
                best_votes, best = votes, (r, tt / np.linalg.norm(tt))
    return best


def rotation_angle_deg(r: np.ndarray) -> float:
    c = (np.trace(r) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def translation_angle_deg(t_a: np.ndarray, t_b: np.ndarray) -> float:
    """Angle between translation directions, sign-invariant."""
    a = t_a / np.linalg.norm(t_a)
    b = t_b / np.linalg.norm(t_b)
    c = abs(float(a @ b))
    return float(np.degrees(np.arccos(np.clip(c, 0.0, 1.0))))


def relative_pose_error(p0, p1, k0, k1, r_gt, t_gt, px_thresh: float = 1.0,
                        seed: int = 0) -> float:
    """max(rotation, translation) angular error in degrees; 180 on failure."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    if p0.shape[0] < 8:
        return 180.0
    e, ctx = estimate_essential(p0, p1, k0, k1, px_thresh, seed=seed)
    if e is None:
        return 180.0
    x0, x1, mask = ctx
    if mask.sum() < 5:
        return 180.0
    r, t = decompose_essential(e, x0[mask], x1[mask])
    err_r = rotation_angle_deg(r.T @ r_gt)
    err_t = translation_angle_deg(t, t_gt)
    return max(err_r, err_t)
