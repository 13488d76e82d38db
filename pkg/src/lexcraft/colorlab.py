"""Deterministic color numerics: CIELAB conversion, seeded k-means palette
extraction, and palette quantization with proportional weighting.

All clustering and matching happens in CIELAB (D65 white point) because the
goal is palette *perception*: Euclidean distance in Lab approximates a
just-noticeable color difference (ΔE ≈ 1), which also gives the merge
threshold for near-duplicate palette entries a physical meaning.

Everything here is a pure function of its arguments. Randomness only enters
through an explicit integer seed, so identical inputs yield byte-identical
palettes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    EmptyPalette,
    InvalidK,
    NonPaletteColor,
)

# sRGB -> XYZ matrix (D65 illuminant, sRGB primaries), Bruce Lindbloom tables.
_M_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_M_XYZ_TO_RGB = np.linalg.inv(_M_RGB_TO_XYZ)

_D65_WHITE = np.array([0.95047, 1.00000, 1.08883])

# CIE LAB segmentation constants.
_EPSILON = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0

# Centroids closer than one just-noticeable difference apart are merged so a
# palette never presents two visually identical swatches.
MERGE_DELTA_E = 2.0

# Lloyd iteration stop: max centroid movement in Lab, and iteration cap.
_CONVERGENCE_EPS = 1e-3
_MAX_ITERATIONS = 50

# k-means++ restarts drawn from the one seeded stream; the cheapest guard
# against a bad local optimum on small inputs.
_N_INIT = 10

# Up to this many distinct colors, exact partition search is ~1 ms and makes
# the near-optimality guarantee on tiny images unconditional.
_EXACT_CAP = 10

# Agglomerative seeding is only worth its O(d^2) per merge below this many
# distinct colors; larger inputs have smooth cost landscapes where the
# random restarts suffice.
_WARD_CAP = 1024

# Images above this pixel count are strided down before clustering.
SAMPLE_CAP = 4096

# Proportional rebalancing: shares within this of the target are left alone.
PROPORTION_TOLERANCE = 0.02
_REBALANCE_PASSES = 10


@dataclass(frozen=True, order=True)
class Rgb:
    """An sRGB color with integer channels in [0, 255]."""

    r: int
    g: int
    b: int

    def __post_init__(self):
        for name in ("r", "g", "b"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"channel {name} must be an integer, got {v!r}")
            if not 0 <= int(v) <= 255:
                raise ValueError(f"channel {name}={v} outside [0, 255]")
            object.__setattr__(self, name, int(v))

    def to_hex(self) -> str:
        return f"#{self.r:02X}{self.g:02X}{self.b:02X}"

    @classmethod
    def from_hex(cls, text: str) -> "Rgb":
        s = text.lstrip("#")
        if len(s) != 6:
            raise ValueError(f"expected #RRGGBB, got {text!r}")
        return cls(int(s[0:2], 16), int(s[2:4], 16), int(s[4:6], 16))

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.r, self.g, self.b)


@dataclass(frozen=True)
class Lab:
    """CIELAB coordinates: l in [0, 100], a/b unbounded opponent axes."""

    l: float
    a: float
    b: float

    def __post_init__(self):
        if not -1e-9 <= self.l <= 100.0 + 1e-9:
            raise ValueError(f"lightness {self.l} outside [0, 100]")


class WeightedPalette:
    """An ordered palette of distinct colors with weights summing to 1.

    Entries are sorted by weight descending; exact ties fall back to the
    (r, g, b) tuple so equal-weight palettes still have one canonical order.
    Duplicate colors are merged at construction.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[tuple[Rgb, float]]):
        merged: dict[tuple[int, int, int], float] = {}
        for color, weight in entries:
            if not isinstance(color, Rgb):
                color = Rgb(*color)
            w = float(weight)
            if not 0.0 <= w <= 1.0 + 1e-9:
                raise ValueError(f"weight {w} outside [0, 1]")
            merged[color.as_tuple()] = merged.get(color.as_tuple(), 0.0) + w
        if not merged:
            raise EmptyPalette("palette has no entries")
        total = sum(merged.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"weights sum to {total}, expected 1 ± 1e-6")
        ordered = sorted(merged.items(), key=lambda kv: (-kv[1], tuple(-c for c in kv[0])))
        self.entries: tuple[tuple[Rgb, float], ...] = tuple(
            (Rgb(*color), weight) for color, weight in ordered
        )

    @classmethod
    def normalized(cls, entries: Iterable[tuple[Rgb, float]]) -> "WeightedPalette":
        """Build from nonnegative raw weights, normalizing them to sum 1."""
        items = list(entries)
        total = sum(float(w) for _, w in items)
        if not items or total <= 0:
            raise EmptyPalette("palette has no weighted entries")
        return cls((c, float(w) / total) for c, w in items)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, WeightedPalette) and self.to_doc() == other.to_doc()

    def colors(self) -> tuple[Rgb, ...]:
        return tuple(c for c, _ in self.entries)

    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.entries)

    def to_doc(self) -> list[dict]:
        rounded = quantize_weights(self.weights())
        return [
            {"rgb": c.to_hex(), "weight": w}
            for (c, _), w in zip(self.entries, rounded)
        ]

    @classmethod
    def from_doc(cls, doc: Sequence[dict]) -> "WeightedPalette":
        return cls((Rgb.from_hex(e["rgb"]), float(e["weight"])) for e in doc)

    def __repr__(self) -> str:
        inner = ", ".join(f"({c.to_hex()}, {w:.6f})" for c, w in self.entries)
        return f"WeightedPalette([{inner}])"


def quantize_weights(weights: Sequence[float]) -> list[float]:
    """Round weights summing to ~1 onto a 6-decimal grid that sums to exactly
    1.0: independent rounding can drift past the documented 1e-6 tolerance.

    Floors every weight at 1e-6 resolution, then hands the leftover units to
    the largest remainders (entry order breaks ties, which is deterministic
    because palette order is canonical).
    """
    scaled = [w * 1_000_000 for w in weights]
    floors = [math.floor(s) for s in scaled]
    deficit = 1_000_000 - sum(floors)
    order = sorted(range(len(scaled)), key=lambda i: (floors[i] - scaled[i], i))
    bumped = set(order[:deficit])
    return [(f + (1 if i in bumped else 0)) / 1_000_000 for i, f in enumerate(floors)]


class QuantizeMode(Enum):
    NEAREST = "nearest"
    PROPORTIONAL = "proportional"


# ---------------------------------------------------------------------------
# sRGB <-> CIELAB
# ---------------------------------------------------------------------------


def _srgb_to_linear(channels: np.ndarray) -> np.ndarray:
    u = channels / 255.0
    return np.where(u <= 0.04045, u / 12.92, ((u + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(linear: np.ndarray) -> np.ndarray:
    lin = np.clip(linear, 0.0, 1.0)
    srgb = np.where(lin <= 0.0031308, lin * 12.92, 1.055 * np.power(lin, 1 / 2.4) - 0.055)
    return srgb * 255.0


def rgb_array_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Vectorized sRGB (..., 3) uint8/float in [0,255] to Lab (..., 3)."""
    xyz = _srgb_to_linear(np.asarray(rgb, dtype=np.float64)) @ _M_RGB_TO_XYZ.T
    t = xyz / _D65_WHITE
    f = np.where(t > _EPSILON, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)
    l = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([l, a, b], axis=-1)


def lab_array_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Vectorized Lab (..., 3) to sRGB uint8 (..., 3), clipped to gamut."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0

    def f_inv(f: np.ndarray) -> np.ndarray:
        f3 = f**3
        return np.where(f3 > _EPSILON, f3, (116.0 * f - 16.0) / _KAPPA)

    xyz = np.stack([f_inv(fx), f_inv(fy), f_inv(fz)], axis=-1) * _D65_WHITE
    linear = xyz @ _M_XYZ_TO_RGB.T
    return np.clip(np.rint(_linear_to_srgb(linear)), 0, 255).astype(np.uint8)


def srgb_to_lab(c: Rgb) -> Lab:
    """Convert one sRGB color to CIELAB (D65)."""
    l, a, b = rgb_array_to_lab(np.array([c.r, c.g, c.b], dtype=np.float64))
    return Lab(float(np.clip(l, 0.0, 100.0)), float(a), float(b))


def lab_to_srgb(c: Lab) -> Rgb:
    """Inverse conversion; out-of-gamut values are clipped."""
    r, g, b = lab_array_to_rgb(np.array([c.l, c.a, c.b], dtype=np.float64))
    return Rgb(int(r), int(g), int(b))


def delta_e(a: Lab, b: Lab) -> float:
    """Euclidean Lab distance (CIE76 ΔE)."""
    return math.sqrt((a.l - b.l) ** 2 + (a.a - b.a) ** 2 + (a.b - b.b) ** 2)


# ---------------------------------------------------------------------------
# k-means palette extraction
# ---------------------------------------------------------------------------


def _as_pixel_rows(pixels) -> np.ndarray:
    """Accept a list of Rgb, an (N, 3) array, or an (H, W, 3) image."""
    if isinstance(pixels, np.ndarray):
        arr = pixels
        if arr.ndim == 3 and arr.shape[2] == 3:
            arr = arr.reshape(-1, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected (N, 3) or (H, W, 3) pixels, got {arr.shape}")
        return arr.astype(np.uint8, copy=False)
    rows = [(p.r, p.g, p.b) if isinstance(p, Rgb) else tuple(p) for p in pixels]
    return np.array(rows, dtype=np.uint8).reshape(-1, 3)


def _subsample(flat: np.ndarray) -> np.ndarray:
    n = flat.shape[0]
    if n <= SAMPLE_CAP:
        return flat
    stride = -(-n // SAMPLE_CAP)  # ceil
    return flat[::stride]


def _lloyd(lab: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd iterations from given centers. Returns (centers, labels, cost)."""
    n = lab.shape[0]
    k = centers.shape[0]
    labels = np.zeros(n, dtype=np.intp)
    for _ in range(_MAX_ITERATIONS):
        dists = np.sum((lab[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dists, axis=1)
        moved = 0.0
        new_centers = centers.copy()
        for i in range(k):
            members = lab[labels == i]
            if len(members):
                new_centers[i] = members.mean(axis=0)
                moved = max(moved, float(np.linalg.norm(new_centers[i] - centers[i])))
        centers = new_centers
        if moved < _CONVERGENCE_EPS:
            break
    dists = np.sum((lab[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    labels = np.argmin(dists, axis=1)
    cost = float(dists[np.arange(n), labels].sum())
    return centers, labels, cost


def _kmeans_once(lab: np.ndarray, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, float]:
    """One k-means++ init plus Lloyd run. Returns (centers, labels, cost)."""
    n = lab.shape[0]
    centers = np.empty((k, 3))
    centers[0] = lab[rng.integers(n)]
    d2 = np.sum((lab - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[i:] = centers[0]
            break
        centers[i] = lab[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((lab - centers[i]) ** 2, axis=1))
    return _lloyd(lab, centers)


def _exact_small_centers(points: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    """Exact minimum-cost clustering of a handful of distinct colors.

    Branch-and-bound over all partitions into at most k groups. Affordable
    only for tiny inputs, where Lloyd restarts are least reliable; this is
    what makes the near-optimality guarantee on small images hold.
    """
    pts = [tuple(map(float, p)) for p in points]
    wts = [float(w) for w in weights]
    n = len(pts)
    best_cost = math.inf
    best_parts: list[list[int]] = []

    def part_cost(stat: list[float]) -> float:
        w, sx, sy, sz, sq = stat
        return sq - (sx * sx + sy * sy + sz * sz) / w

    def recurse(i: int, parts: list[list[int]], stats: list[list[float]], cost: float):
        nonlocal best_cost, best_parts
        if cost >= best_cost:
            return
        if i == n:
            best_cost = cost
            best_parts = [list(p) for p in parts]
            return
        x, y, z = pts[i]
        w = wts[i]
        for part, stat in zip(parts, stats):
            old = part_cost(stat)
            stat[0] += w
            stat[1] += w * x
            stat[2] += w * y
            stat[3] += w * z
            stat[4] += w * (x * x + y * y + z * z)
            part.append(i)
            recurse(i + 1, parts, stats, cost - old + part_cost(stat))
            part.pop()
            stat[0] -= w
            stat[1] -= w * x
            stat[2] -= w * y
            stat[3] -= w * z
            stat[4] -= w * (x * x + y * y + z * z)
        if len(parts) < k:
            parts.append([i])
            stats.append([w, w * x, w * y, w * z, w * (x * x + y * y + z * z)])
            recurse(i + 1, parts, stats, cost)
            parts.pop()
            stats.pop()

    recurse(0, [], [], 0.0)
    centers = []
    for part in best_parts:
        total = sum(wts[i] for i in part)
        centers.append(
            [sum(wts[i] * pts[i][axis] for i in part) / total for axis in range(3)]
        )
    return np.asarray(centers, dtype=np.float64)


def _ward_init(points: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    """Agglomerative (Ward linkage) seeding: merge the centroid pair with the
    least cost increase until k clusters remain.

    Random k-means++ restarts occasionally all land in one bad basin on tiny
    well-separated inputs; this deterministic candidate covers that case.
    """
    mu = np.asarray(points, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    while len(mu) > k:
        diff = mu[:, None, :] - mu[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        pair_w = (w[:, None] * w[None, :]) / (w[:, None] + w[None, :])
        increase = pair_w * d2
        np.fill_diagonal(increase, np.inf)
        i, j = np.unravel_index(int(np.argmin(increase)), increase.shape)
        if j < i:
            i, j = j, i
        merged_mu = (w[i] * mu[i] + w[j] * mu[j]) / (w[i] + w[j])
        merged_w = w[i] + w[j]
        keep = [t for t in range(len(mu)) if t not in (i, j)]
        mu = np.vstack([mu[keep], merged_mu])
        w = np.append(w[keep], merged_w)
    return mu


def _merge_close_centroids(
    centers: list[np.ndarray], weights: list[float]
) -> tuple[list[np.ndarray], list[float]]:
    """Weight-average any centroid pair closer than MERGE_DELTA_E, repeatedly."""
    centers = [np.asarray(c, dtype=np.float64) for c in centers]
    weights = list(weights)
    while len(centers) > 1:
        best = None
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                d = float(np.linalg.norm(centers[i] - centers[j]))
                if d < MERGE_DELTA_E and (best is None or d < best[0]):
                    best = (d, i, j)
        if best is None:
            break
        _, i, j = best
        wi, wj = weights[i], weights[j]
        centers[i] = (centers[i] * wi + centers[j] * wj) / (wi + wj)
        weights[i] = wi + wj
        del centers[j], weights[j]
    return centers, weights


def kmeans_palette(pixels, k: int, seed: int) -> WeightedPalette:
    """Extract a k-entry weighted palette from pixels, deterministically.

    Clustering runs in Lab with k-means++ initialization driven by a
    generator seeded from ``seed``: several restarts share the one stream,
    plus one deterministic seeding (exact partition search on tiny inputs,
    agglomerative merge otherwise), and the lowest-cost run wins. If the
    input holds fewer than ``k`` distinct colors, each distinct color
    becomes one entry weighted by pixel share. Entry weights are cluster
    pixel shares; near-identical centroids are merged before output.
    """
    flat = _as_pixel_rows(pixels)
    if flat.shape[0] == 0:
        raise EmptyInput("pixels must be nonempty")
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")

    flat = _subsample(flat)
    n = flat.shape[0]
    distinct, counts = np.unique(flat, axis=0, return_counts=True)

    if len(distinct) < k:
        return WeightedPalette(
            (Rgb(*map(int, color)), float(cnt) / n) for color, cnt in zip(distinct, counts)
        )

    lab = rgb_array_to_lab(flat)
    rng = np.random.default_rng(seed)
    best: tuple[np.ndarray, np.ndarray, float] | None = None
    for _ in range(_N_INIT):
        centers, labels, cost = _kmeans_once(lab, k, rng)
        if best is None or cost < best[2] - 1e-12:
            best = (centers, labels, cost)
    if len(distinct) <= _EXACT_CAP:
        seeded = _exact_small_centers(rgb_array_to_lab(distinct.astype(np.float64)), counts, k)
        candidate = _lloyd(lab, seeded)
        if candidate[2] < best[2] - 1e-12:
            best = candidate
    elif len(distinct) <= _WARD_CAP:
        seeded = _ward_init(rgb_array_to_lab(distinct.astype(np.float64)), counts, k)
        candidate = _lloyd(lab, seeded)
        if candidate[2] < best[2] - 1e-12:
            best = candidate
    centers, labels, _ = best

    shares = np.bincount(labels, minlength=k) / n
    kept = [(centers[i], float(shares[i])) for i in range(k) if shares[i] > 0]
    merged_centers, merged_weights = _merge_close_centroids(
        [c for c, _ in kept], [w for _, w in kept]
    )
    rgb_centers = [lab_array_to_rgb(c) for c in merged_centers]
    return WeightedPalette(
        (Rgb(int(c[0]), int(c[1]), int(c[2])), w) for c, w in zip(rgb_centers, merged_weights)
    )


# ---------------------------------------------------------------------------
# Palette quantization
# ---------------------------------------------------------------------------


def _check_image(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {arr.shape}")
    return arr.astype(np.uint8, copy=False)


def _check_mask(mask, shape: tuple[int, int]) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.shape != shape:
        raise DimensionMismatch(f"mask shape {arr.shape} != image shape {shape}")
    return arr.astype(bool, copy=False)


def _rebalance(
    labels: np.ndarray,
    unique_dists: np.ndarray,
    inverse: np.ndarray,
    targets: np.ndarray,
) -> np.ndarray:
    """Greedy proportional reassignment toward target weights.

    Per pass: every entry over its target share by more than the tolerance
    sheds pixels, cheapest Lab-distance margin first (flat row-major index
    breaks ties), each moved pixel going to its nearest entry still under
    quota. Receiving entries stop accepting at their quota, so a pass cannot
    overshoot; residual imbalance after the pass cap is left as-is.
    """
    n = labels.shape[0]
    counts = np.bincount(labels, minlength=len(targets)).astype(np.int64)
    target_counts = np.rint(targets * n).astype(np.int64)

    for _ in range(_REBALANCE_PASSES):
        shares = counts / n
        excess = shares - targets
        over = [int(i) for i in np.argsort(-excess, kind="stable") if excess[i] > PROPORTION_TOLERANCE]
        if not over:
            break
        for i in over:
            if counts[i] <= target_counts[i]:
                continue
            under = np.where(counts < target_counts)[0]
            if len(under) == 0:
                break
            cand = np.where(labels == i)[0]
            cand_dists = unique_dists[inverse[cand]]
            margins = cand_dists[:, under].min(axis=1) - cand_dists[:, i]
            order = np.lexsort((cand, margins))
            for p in cand[order]:
                if counts[i] <= target_counts[i]:
                    break
                under = np.where(counts < target_counts)[0]
                if len(under) == 0:
                    break
                row = unique_dists[inverse[p]]
                j = int(under[np.argmin(row[under])])
                labels[p] = j
                counts[i] -= 1
                counts[j] += 1
    return labels


def quantize_to_palette(
    image: np.ndarray,
    palette: WeightedPalette,
    mode: QuantizeMode = QuantizeMode.NEAREST,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Recolor every in-mask pixel to a palette member.

    Nearest mode assigns each pixel its closest entry in Lab. Proportional
    mode starts from that assignment and rebalances so achieved shares track
    the palette weights. Out-of-mask pixels are returned bit-identical.
    """
    arr = _check_image(image)
    if palette is None or len(palette) == 0:
        raise EmptyPalette("palette must be nonempty")
    h, w, _ = arr.shape
    sel = _check_mask(mask, (h, w)) if mask is not None else np.ones((h, w), dtype=bool)

    out = arr.copy()
    flat = arr[sel].reshape(-1, 3)
    if flat.shape[0] == 0:
        return out

    palette_lab = rgb_array_to_lab(np.array([c.as_tuple() for c in palette.colors()], dtype=np.float64))
    unique_colors, inverse = np.unique(flat, axis=0, return_inverse=True)
    unique_lab = rgb_array_to_lab(unique_colors)
    unique_dists = np.sqrt(
        np.sum((unique_lab[:, None, :] - palette_lab[None, :, :]) ** 2, axis=2)
    )
    labels = np.argmin(unique_dists, axis=1)[inverse]

    if mode == QuantizeMode.PROPORTIONAL:
        labels = _rebalance(labels, unique_dists, inverse, np.array(palette.weights()))

    palette_rgb = np.array([c.as_tuple() for c in palette.colors()], dtype=np.uint8)
    out[sel] = palette_rgb[labels]
    return out


def achieved_proportions(
    image: np.ndarray,
    palette: WeightedPalette,
    mask: np.ndarray | None = None,
) -> list[float]:
    """Per-entry pixel share over in-mask pixels of an already-quantized image."""
    arr = _check_image(image)
    if palette is None or len(palette) == 0:
        raise EmptyPalette("palette must be nonempty")
    h, w, _ = arr.shape
    sel = _check_mask(mask, (h, w)) if mask is not None else np.ones((h, w), dtype=bool)
    flat = arr[sel].reshape(-1, 3)
    if flat.shape[0] == 0:
        raise EmptyInput("mask selects no pixels")

    palette_rgb = np.array([c.as_tuple() for c in palette.colors()], dtype=np.uint8)
    matches = np.all(flat[:, None, :] == palette_rgb[None, :, :], axis=2)
    matched = matches.any(axis=1)
    if not matched.all():
        offender = flat[np.argmin(matched)]
        raise NonPaletteColor(f"pixel {tuple(int(v) for v in offender)} matches no palette entry")
    counts = matches.sum(axis=0)
    return [float(c) / flat.shape[0] for c in counts]
