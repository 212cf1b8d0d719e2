"""Area apparent similarity: activity maps, providers, and the shared matrix.

The similarity of two areas is the product of the mean patch activities of
their two activity maps. The baseline provider scores 8x8 patches of 64x64
grayscale crops by best zero-mean normalized cross-correlation against the
other image; a learned scorer can be swapped in through the provider contract
or injected from a precomputed table file.

The cross-graph SimilarityMatrix memoizes pair values and applies the
inclusion-hierarchy pruning rule: a parent pair scoring below T_as zeroes its
next-level children pairs without ever invoking the provider for them.
"""

from __future__ import annotations

import json
import threading

import cv2
import numpy as np

SIM_SIDE = 64
PATCH = 8

PRUNED = "pruned"
UNCOMPUTED = "uncomputed"


def to_gray(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3:
        img = cv2.cvtColor(img, cv2.COLOR_BGR2GRAY)
    return img.astype(np.float32)


def prepare_area_image(full: np.ndarray, area, side: int = SIM_SIDE) -> np.ndarray:
    crop = to_gray(full)[area.y_min:area.y_max, area.x_min:area.x_max]
    return cv2.resize(crop, (side, side), interpolation=cv2.INTER_AREA)


def _patches(img: np.ndarray) -> np.ndarray:
    """(n_patches, PATCH*PATCH) rows in row-major patch-grid order."""
    h, w = img.shape
    gh, gw = h // PATCH, w // PATCH
    view = img[:gh * PATCH, :gw * PATCH].reshape(gh, PATCH, gw, PATCH)
    return view.transpose(0, 2, 1, 3).reshape(gh * gw, PATCH * PATCH)


def baseline_activity(img_a: np.ndarray, img_b: np.ndarray):
    """Per-patch best-correlation activity maps for both images.

    Activity of a patch is its best zero-mean NCC against any patch of the
    other image, clamped to [0, 1]. Zero-variance patches fall back to
    mean-intensity proximity (1 - |mean difference| / 255) against the
    closest-mean patch of the other image.
    """
    if img_a.shape != img_b.shape:
        raise ValueError(f"shape mismatch {img_a.shape} vs {img_b.shape}")
    side = img_a.shape[0]
    if img_a.shape[0] != img_a.shape[1] or side % PATCH:
        raise ValueError(f"expected square side multiple of {PATCH}, got "
                         f"{img_a.shape}")
    grid = side // PATCH

    pa = _patches(img_a.astype(np.float64))
    pb = _patches(img_b.astype(np.float64))
    mean_a, mean_b = pa.mean(axis=1), pb.mean(axis=1)
    ca, cb = pa - mean_a[:, None], pb - mean_b[:, None]
    norm_a = np.linalg.norm(ca, axis=1)
    norm_b = np.linalg.norm(cb, axis=1)
    const_a, const_b = norm_a < 1e-9, norm_b < 1e-9

    safe_a = np.where(const_a, 1.0, norm_a)
    safe_b = np.where(const_b, 1.0, norm_b)
    corr = (ca / safe_a[:, None]) @ (cb / safe_b[:, None]).T
    corr[const_a, :] = 0.0
    corr[:, const_b] = 0.0
    corr = np.clip(corr, 0.0, 1.0)

    act_a = corr.max(axis=1)
    act_b = corr.max(axis=0)
    if const_a.any():
        diff = np.abs(mean_a[const_a, None] - mean_b[None, :])
        act_a[const_a] = 1.0 - diff.min(axis=1) / 255.0
    if const_b.any():
        diff = np.abs(mean_b[const_b, None] - mean_a[None, :])
        act_b[const_b] = 1.0 - diff.min(axis=1) / 255.0
    return act_a.reshape(grid, grid), act_b.reshape(grid, grid)


class NccSimilarityProvider:
    """Baseline similarity: product of mean activities of both directions."""

    side = SIM_SIDE

    def activity_maps(self, img_a, img_b):
        return baseline_activity(img_a, img_b)

    def similarity(self, img_a, img_b) -> float:
        map_a, map_b = self.activity_maps(img_a, img_b)
        return float(map_a.mean() * map_b.mean())


def area_similarity(a0_img: np.ndarray, a1_img: np.ndarray, provider) -> float:
    """Similarity of two prepared area images under a provider."""
    return provider.similarity(a0_img, a1_img)


def image_pair_scorer(g0, g1, img0, img1, provider):
    """Node-pair scorer that crops both areas and runs the provider."""
    cache: dict[int, np.ndarray] = {}
    cache1: dict[int, np.ndarray] = {}

    def score(i: int, j: int) -> float:
        if i not in cache:
            cache[i] = prepare_area_image(img0, g0.nodes[i].area)
        if j not in cache1:
            cache1[j] = prepare_area_image(img1, g1.nodes[j].area)
        return provider.similarity(cache[i], cache1[j])

    return score


def table_scorer(table: dict[tuple[int, int], float]):
    """Node-pair scorer backed by an injected similarity table."""

    def score(i: int, j: int) -> float:
        return float(table.get((i, j), 0.0))

    return score


def load_similarity_table(path: str) -> dict[tuple[int, int], float]:
    """Read an injection file: {"entries": [[node0, node1, sim], ...]}."""
    with open(path) as f:
        obj = json.load(f)
    table = {}
    for i, j, sim in obj["entries"]:
        table[(int(i), int(j))] = float(sim)
    return table


class SimilarityMatrix:
    """Memoized node-pair similarities with inclusion-hierarchy pruning.

    Cells hold either a computed value or a pruned zero. When a computed pair
    (i, j) scores below T_as, every pair of their next-level children (child
    level exactly one below its parent's, on both sides) is marked pruned;
    pruned cells return 0 without a scorer call and never overwrite computed
    values. Thread-safe with write-once cells.
    """

    def __init__(self, g0, g1, scorer, t_as: float, prune: bool = True):
        self.g0 = g0
        self.g1 = g1
        self._scorer = scorer
        self.t_as = t_as
        self.prune = prune
        self.scorer_calls = 0
        self._values: dict[tuple[int, int], float] = {}
        self._pruned: set[tuple[int, int]] = set()
        self._lock = threading.Lock()

    def state(self, i: int, j: int):
        with self._lock:
            if (i, j) in self._values:
                return self._values[(i, j)]
            return PRUNED if (i, j) in self._pruned else UNCOMPUTED

    def get_or_compute(self, i: int, j: int) -> float:
        if i not in self.g0.nodes or j not in self.g1.nodes:
            raise IndexError(f"node pair ({i}, {j}) out of range")
        with self._lock:
            if (i, j) in self._values:
                return self._values[(i, j)]
            if (i, j) in self._pruned:
                return 0.0
        value = float(self._scorer(i, j))
        with self._lock:
            if (i, j) in self._values:  # lost the race; keep the first write
                return self._values[(i, j)]
            self.scorer_calls += 1
            self._values[(i, j)] = value
            if self.prune and value < self.t_as:
                self._prune_children(i, j)
        return value

    def _prune_children(self, i: int, j: int) -> None:
        li = self.g0.nodes[i].level
        lj = self.g1.nodes[j].level
        ch0 = [c for c in self.g0.children(i)
               if self.g0.nodes[c].level == li - 1]
        ch1 = [c for c in self.g1.children(j)
               if self.g1.nodes[c].level == lj - 1]
        for h in ch0:
            for k in ch1:
                if (h, k) not in self._values:
                    self._pruned.add((h, k))

    def transposed(self) -> "TransposedMatrix":
        return TransposedMatrix(self)


class TransposedMatrix:
    """Swapped-argument view for matching in the reverse direction."""

    def __init__(self, base: SimilarityMatrix):
        self._base = base
        self.g0 = base.g1
        self.g1 = base.g0

    def get_or_compute(self, i: int, j: int) -> float:
        return self._base.get_or_compute(j, i)

    def state(self, i: int, j: int):
        return self._base.state(j, i)
