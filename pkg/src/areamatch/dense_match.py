"""Dense area matching through Gaussian mixture matching distributions.

Coarse patch matches into the target image define a mixture over target
coordinates: one component per match, centered on the matched point, spread
inversely to its confidence. The matched area is the bounding box of the
pixels where the mixture clears a confidence level, and a few EM steps on
samples from the opposite direction pull the two views into agreement before
extraction. The source area is refined the same way with the roles swapped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import Area, ImageDims
from .similarity import PATCH, _patches, to_gray

MIN_CORR = 0.2
N_SAMPLES = 1024
# EM needs several observations per mixture component to avoid starving
# components into covariance-floor spikes; scale the sample count with K.
OBS_PER_COMPONENT = 8
COV_FLOOR = 1e-3
STARVED = 1e-12


@dataclass(frozen=True)
class PatchMatch:
    """One coarse correspondence between patch centers, confidence in (0, 1]."""

    src_center: tuple
    tgt_center: tuple
    confidence: float


@dataclass
class GMMParams:
    means: np.ndarray        # (K, 2) xy
    covariances: np.ndarray  # (K, 2, 2)
    weights: np.ndarray      # (K,), sums to 1

    @property
    def num_components(self) -> int:
        return self.means.shape[0]

    def copy(self) -> "GMMParams":
        return GMMParams(self.means.copy(), self.covariances.copy(),
                         self.weights.copy())


def baseline_coarse_match(src: np.ndarray, tgt: np.ndarray) -> list:
    """Mutual-nearest-neighbor zero-mean NCC matching of 8x8 patches.

    Confidence is the correlation clamped to [0, 1]; pairs below MIN_CORR are
    dropped, which also discards structureless (zero-variance) patches.
    """
    for img in (src, tgt):
        if img.ndim != 2:
            raise ValueError("expected grayscale images")
        if min(img.shape) < PATCH:
            raise ValueError(f"image {img.shape} smaller than one patch")

    pa = _patches(src.astype(np.float32))
    pb = _patches(tgt.astype(np.float32))
    ca = pa - pa.mean(axis=1, keepdims=True)
    cb = pb - pb.mean(axis=1, keepdims=True)
    na = np.linalg.norm(ca, axis=1)
    nb = np.linalg.norm(cb, axis=1)
    ca /= np.where(na < 1e-9, 1.0, na)[:, None]
    cb /= np.where(nb < 1e-9, 1.0, nb)[:, None]
    corr = ca @ cb.T
    corr[na < 1e-9, :] = 0.0
    corr[:, nb < 1e-9] = 0.0

    fwd = corr.argmax(axis=1)
    rev = corr.argmax(axis=0)
    gw_s, gw_t = src.shape[1] // PATCH, tgt.shape[1] // PATCH

    matches = []
    for i, j in enumerate(fwd):
        c = float(corr[i, j])
        if rev[j] != i or c < MIN_CORR:
            continue
        sy, sx = divmod(i, gw_s)
        ty, tx = divmod(int(j), gw_t)
        matches.append(PatchMatch(
            (sx * PATCH + PATCH / 2, sy * PATCH + PATCH / 2),
            (tx * PATCH + PATCH / 2, ty * PATCH + PATCH / 2),
            min(c, 1.0)))
    return matches


def load_coarse_matches(path: str) -> list:
    """Read precomputed coarse matches from a JSON file.

    Schema: {"matches": [{"src": [x, y], "tgt": [x, y], "confidence": c}]}.
    """
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    out = []
    for rec in doc["matches"]:
        c = float(rec["confidence"])
        if not 0.0 < c <= 1.0:
            raise ValueError(f"confidence {c} outside (0, 1]")
        out.append(PatchMatch(tuple(float(v) for v in rec["src"]),
                              tuple(float(v) for v in rec["tgt"]), c))
    return out


def build_gmm(matches: list) -> GMMParams | None:
    """Mixture over target coordinates: means at the matched centers,
    isotropic spread PATCH / confidence, uniform weights."""
    if not matches:
        return None
    k = len(matches)
    means = np.array([m.tgt_center for m in matches], dtype=float)
    covs = np.zeros((k, 2, 2))
    for i, m in enumerate(matches):
        covs[i] = np.eye(2) * (PATCH / m.confidence)
    return GMMParams(means, covs, np.full(k, 1.0 / k))


def _component_pdfs(g: GMMParams, pts: np.ndarray) -> np.ndarray:
    """(n, K) matrix of per-component Gaussian densities."""
    diff = pts[:, None, :] - g.means[None, :, :]
    inv = np.linalg.inv(g.covariances)
    det = np.linalg.det(g.covariances)
    maha = np.einsum("nki,kij,nkj->nk", diff, inv, diff)
    return np.exp(-0.5 * maha) / (2.0 * np.pi * np.sqrt(det))[None, :]


def density(g: GMMParams, x) -> float | np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    vals = _component_pdfs(g, pts) @ g.weights
    return float(vals[0]) if np.ndim(x) == 1 else vals


def log_likelihood(g: GMMParams, pts: np.ndarray) -> float:
    joint = _component_pdfs(g, pts) * g.weights[None, :]
    return float(np.log(joint.sum(axis=1) + 1e-300).sum())


def density_grid(g: GMMParams, dims: ImageDims) -> np.ndarray:
    """Mixture density on the integer pixel grid.

    Each component only touches a +-5 sigma window around its mean, so the
    cost scales with component spread rather than image size.
    """
    out = np.zeros((dims.height, dims.width))
    eigs = np.linalg.eigvalsh(g.covariances)
    for k in range(g.num_components):
        r = 5.0 * float(np.sqrt(eigs[k, -1]))
        mx, my = g.means[k]
        x0 = max(0, int(np.floor(mx - r)))
        x1 = min(dims.width, int(np.ceil(mx + r)) + 1)
        y0 = max(0, int(np.floor(my - r)))
        y1 = min(dims.height, int(np.ceil(my + r)) + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        xs, ys = np.meshgrid(np.arange(x0, x1), np.arange(y0, y1))
        pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(float)
        one = GMMParams(g.means[k:k + 1], g.covariances[k:k + 1],
                        np.ones(1))
        out[y0:y1, x0:x1] += (g.weights[k]
                              * density(one, pts).reshape(y1 - y0, x1 - x0))
    return out


def extract_area(g: GMMParams, t_c: float, dims: ImageDims) -> Area | None:
    """Tight bounding box of the density super-level set, or no-match."""
    grid = density_grid(g, dims)
    ys, xs = np.nonzero(grid >= t_c)
    if xs.size == 0:
        return None
    return Area(int(xs.min()), int(ys.min()),
                int(xs.max()) + 1, int(ys.max()) + 1)


def density_level(g: GMMParams, t_c: float) -> float:
    """Scale the confidence threshold by the mixture's typical peak height.

    At the default threshold this cuts an average isolated component at
    Mahalanobis radius sqrt(2), independent of how many components share the
    mixture, so extraction does not starve as K grows.
    """
    det = np.linalg.det(g.covariances)
    peaks = g.weights / (2.0 * np.pi * np.sqrt(det))
    return 2.0 * np.pi * t_c * float(peaks.mean())


def sample_gmm(g: GMMParams, n: int, rng: np.random.Generator) -> np.ndarray:
    counts = rng.multinomial(n, g.weights)
    parts = [rng.multivariate_normal(g.means[k], g.covariances[k], size=c,
                                     method="cholesky")
             for k, c in enumerate(counts) if c > 0]
    return np.concatenate(parts, axis=0)


def _floor_covariances(covs: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(covs)
    vals = np.maximum(vals, COV_FLOOR)
    return np.einsum("kij,kj,klj->kil", vecs, vals, vecs)


def em_refine(observations: np.ndarray, init: GMMParams,
              s_em: int) -> GMMParams:
    """Standard EM on the observations starting from init.

    Covariance eigenvalues are floored at COV_FLOOR; components whose total
    responsibility starves are dropped and the weights renormalized.
    """
    obs = np.asarray(observations, dtype=float)
    if obs.shape[0] < init.num_components:
        raise ValueError(f"{obs.shape[0]} observations for "
                         f"{init.num_components} components")
    g = init.copy()
    for _ in range(s_em):
        joint = _component_pdfs(g, obs) * g.weights[None, :]
        resp = joint / (joint.sum(axis=1, keepdims=True) + 1e-300)
        totals = resp.sum(axis=0)
        alive = totals >= STARVED
        if not alive.all():
            resp = resp[:, alive]
            resp /= resp.sum(axis=1, keepdims=True) + 1e-300
            totals = resp.sum(axis=0)
            g = GMMParams(g.means[alive], g.covariances[alive],
                          g.weights[alive] / g.weights[alive].sum())
        means = (resp.T @ obs) / totals[:, None]
        diff = obs[:, None, :] - means[None, :, :]
        covs = np.einsum("nk,nki,nkj->kij", resp, diff, diff) \
            / totals[:, None, None]
        g = GMMParams(means, _floor_covariances(covs), totals / obs.shape[0])
    return g


def _cell(pt) -> tuple:
    return int(pt[0]) // PATCH, int(pt[1]) // PATCH


def _mutual_pairs(fwd: list, rev: list) -> list:
    """Forward/reverse matches naming the same patch cells on both sides."""
    by_cells = {(_cell(f.src_center), _cell(f.tgt_center)): f for f in fwd}
    pairs = []
    for r in rev:
        f = by_cells.get((_cell(r.tgt_center), _cell(r.src_center)))
        if f is not None:
            pairs.append((f, r))
    return pairs


def _transported_init(pairs: list, take_mean, take_conf) -> GMMParams:
    k = len(pairs)
    means = np.array([take_mean(f, r) for f, r in pairs], dtype=float)
    covs = np.zeros((k, 2, 2))
    for i, (f, r) in enumerate(pairs):
        covs[i] = np.eye(2) * (PATCH / take_conf(f, r))
    return GMMParams(means, covs, np.full(k, 1.0 / k))


def match_area_dmesa(src_area_img: np.ndarray, tgt_img: np.ndarray, provider,
                     t_c: float, s_em: int, rng=None, reverse_provider=None):
    """Match one source area image into the target image.

    Forward and reverse coarse matches each build a mixture; the reverse
    parameters ride their mutually-matched forward partners into target
    coordinates and seed EM over samples from the forward mixture. The same
    procedure with the roles swapped refines the source area. Returns
    (target area, refined source area in src_area_img coordinates) or None.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    fwd = provider(src_area_img, tgt_img)
    rev = (reverse_provider or provider)(tgt_img, src_area_img)
    if not fwd or not rev:
        return None
    pairs = _mutual_pairs(fwd, rev)
    if not pairs:
        return None
    n = max(N_SAMPLES, OBS_PER_COMPONENT * len(pairs))

    fwd_gmm = build_gmm(fwd)
    init_t = _transported_init(pairs, lambda f, r: f.tgt_center,
                               lambda f, r: r.confidence)
    ref_t = em_refine(sample_gmm(fwd_gmm, n, rng), init_t, s_em)
    tgt_dims = ImageDims(tgt_img.shape[1], tgt_img.shape[0])
    tgt_area = extract_area(ref_t, density_level(ref_t, t_c), tgt_dims)

    rev_gmm = build_gmm(rev)
    init_s = _transported_init(pairs, lambda f, r: f.src_center,
                               lambda f, r: f.confidence)
    ref_s = em_refine(sample_gmm(rev_gmm, n, rng), init_s, s_em)
    src_dims = ImageDims(src_area_img.shape[1], src_area_img.shape[0])
    src_area = extract_area(ref_s, density_level(ref_s, t_c), src_dims)

    if tgt_area is None or src_area is None:
        return None
    return tgt_area, src_area


def snap_to_patch_grid(area: Area, dims: ImageDims) -> Area:
    """Expand an area outward to patch-aligned bounds inside the image."""
    wmax = (dims.width // PATCH) * PATCH
    hmax = (dims.height // PATCH) * PATCH
    x0 = min((area.x_min // PATCH) * PATCH, wmax - PATCH)
    y0 = min((area.y_min // PATCH) * PATCH, hmax - PATCH)
    x1 = min(-(-area.x_max // PATCH) * PATCH, wmax)
    y1 = min(-(-area.y_max // PATCH) * PATCH, hmax)
    return Area(int(x0), int(y0), int(max(x1, x0 + PATCH)),
                int(max(y1, y0 + PATCH)))


class DenseAreaMatcher:
    """Per-area dense matching against a fixed image pair.

    Source areas are snapped outward to the patch grid, cropped, and matched
    into the target image; results come back in full-image coordinates. A
    precomputed full-frame coarse match list can stand in for the baseline
    matcher, in which case per-area calls filter and shift its records.
    """

    def __init__(self, img0, img1, cfg, provider=None, coarse=None):
        self._img0 = to_gray(img0)
        g1 = to_gray(img1)
        self._img1 = g1[:g1.shape[0] // PATCH * PATCH,
                        :g1.shape[1] // PATCH * PATCH]
        self._cfg = cfg
        self._provider = provider or baseline_coarse_match
        self._coarse = coarse

    def _providers_for(self, rect: Area):
        if self._coarse is None:
            return self._provider, None
        kept = [m for m in self._coarse
                if rect.x_min <= m.src_center[0] < rect.x_max
                and rect.y_min <= m.src_center[1] < rect.y_max]
        local = [PatchMatch((m.src_center[0] - rect.x_min,
                             m.src_center[1] - rect.y_min),
                            m.tgt_center, m.confidence) for m in kept]
        flipped = [PatchMatch(m.tgt_center, m.src_center, m.confidence)
                   for m in local]
        return (lambda a, b: local), (lambda a, b: flipped)

    def match_area(self, area: Area, node_id: int = 0):
        dims = ImageDims(self._img0.shape[1], self._img0.shape[0])
        rect = snap_to_patch_grid(area, dims)
        crop = self._img0[rect.y_min:rect.y_max, rect.x_min:rect.x_max]
        rng = np.random.default_rng([self._cfg.seed, node_id])
        fwd_p, rev_p = self._providers_for(rect)
        res = match_area_dmesa(crop, self._img1, fwd_p, self._cfg.T_c,
                               self._cfg.S_EM, rng=rng,
                               reverse_provider=rev_p)
        if res is None:
            return None
        tgt_area, src_local = res
        from .graphcut_match import AreaMatch
        src_full = Area(src_local.x_min + rect.x_min,
                        src_local.y_min + rect.y_min,
                        src_local.x_max + rect.x_min,
                        src_local.y_max + rect.y_min)
        return AreaMatch(src_full, tgt_area, 0.0, "dense")

    def match_sources(self, sources) -> list:
        """sources: iterable of (node_id, Area). Unmatched areas are skipped."""
        out = []
        for node_id, area in sources:
            m = self.match_area(area, node_id)
            if m is not None:
                out.append(m)
        return out
