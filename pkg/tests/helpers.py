"""Independent oracles used to derive and freeze expected test values.

Everything here deliberately avoids the library's own arithmetic: rectangles
are rasterized to boolean grids, energies are enumerated exhaustively, and
densities are integrated numerically, so the implementations are checked
against a second path to the same numbers.
"""

from __future__ import annotations

import itertools

import numpy as np


def rasterize(rect, w, h):
    """Boolean grid of a half-open rect [x0,x1) x [y0,y1) on a w x h canvas."""
    x0, y0, x1, y1 = rect
    grid = np.zeros((h, w), dtype=bool)
    grid[max(0, y0):max(0, y1), max(0, x0):max(0, x1)] = True
    return grid


def pixel_overlap_ratio(ra, rb, w, h):
    ga, gb = rasterize(ra, w, h), rasterize(rb, w, h)
    inter = np.count_nonzero(ga & gb)
    return inter / min(np.count_nonzero(ga), np.count_nonzero(gb))


def pixel_iou(ra, rb, w, h):
    ga, gb = rasterize(ra, w, h), rasterize(rb, w, h)
    union = np.count_nonzero(ga | gb)
    return np.count_nonzero(ga & gb) / union if union else 0.0


def pixel_envelope(ra, rb, w, h):
    """Bounding box of the union pixel set, as a half-open rect tuple."""
    g = rasterize(ra, w, h) | rasterize(rb, w, h)
    ys, xs = np.nonzero(g)
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


def brute_force_min_energy(similarities, edges, lam):
    """Exhaustive minimum of the binary labeling energy.

    similarities: per-node S_i; edges: list of (i, j, iou_weight).
    Returns (min_energy, argmin labeling). Vectorized over all 2^n labelings.
    """
    s = np.asarray(similarities, dtype=float)
    n = s.size
    labelings = np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)
    energy = np.abs(labelings - s[None, :]).sum(axis=1)
    for i, j, w in edges:
        energy += lam * w * (labelings[:, i] != labelings[:, j])
    best = int(np.argmin(energy))
    return float(energy[best]), labelings[best].astype(int)


def grid_quadrature(density_fn, x_range, y_range, step=0.25):
    """Numerically integrate a 2-D density over a rectangle."""
    xs = np.arange(x_range[0], x_range[1], step)
    ys = np.arange(y_range[0], y_range[1], step)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return float(np.sum(density_fn(pts)) * step * step)


def isotropic_level_radius(sigma2, weight, tau):
    """Radius where weight * N(0, sigma2*I) falls to tau; None if unreachable."""
    peak = weight / (2.0 * np.pi * sigma2)
    if peak < tau:
        return None
    return float(np.sqrt(-2.0 * sigma2 * np.log(tau / peak)))


def step_curve_auc(errors, threshold, n=200001):
    """Dense numerical integration of the empirical recall curve.

    Oracle for the exact piecewise integration in the library: recall(e) =
    fraction of errors <= e, integrated over [0, threshold] / threshold.
    """
    errors = np.asarray(errors, dtype=float)
    grid = np.linspace(0.0, threshold, n)
    recall = (errors[None, :] <= grid[:, None]).mean(axis=1)
    return float(np.trapezoid(recall, grid) / threshold)


def random_rect(rng, w, h, min_side=1, max_side=None):
    """Random valid half-open rect inside a w x h image."""
    max_w = max_side or w
    max_h = max_side or h
    rw = int(rng.integers(min_side, min(max_w, w) + 1))
    rh = int(rng.integers(min_side, min(max_h, h) + 1))
    x0 = int(rng.integers(0, w - rw + 1))
    y0 = int(rng.integers(0, h - rh + 1))
    return x0, y0, x0 + rw, y0 + rh
