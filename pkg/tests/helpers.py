"""Shared test machinery: independent oracles and random generators.

The color-space reference here is written scalar-first from the published
sRGB/D65 CIELAB equations so library code is checked against an independent
derivation, not against itself. The k-means oracle enumerates set partitions
of the distinct colors, which is exact for the small images used in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lexcraft.colorlab import Rgb
from lexcraft.lexicon import ImaginationLevel, VisualLexicon
from lexcraft.moodboard import MoodBoard, NormRect

# Published sRGB (D65, 2 degree observer) CIELAB values, 4 decimal places.
FROZEN_LAB = {
    (255, 0, 0): (53.2408, 80.0925, 67.2032),
    (0, 255, 0): (87.7347, -86.1827, 83.1793),
    (0, 0, 255): (32.2970, 79.1875, -107.8602),
    (255, 255, 255): (100.0, 0.0, 0.0),
    (0, 0, 0): (0.0, 0.0, 0.0),
    (128, 128, 128): (53.5850, 0.0, 0.0),
    (255, 165, 0): (74.9357, 23.9328, 78.9498),
}


def reference_lab(rgb: tuple[int, int, int]) -> tuple[float, float, float]:
    """Scalar sRGB -> CIELAB (D65), straight from the standard equations."""

    def inv_gamma(u: float) -> float:
        return u / 12.92 if u <= 0.04045 else ((u + 0.055) / 1.055) ** 2.4

    r, g, b = (inv_gamma(v / 255.0) for v in rgb)
    # sRGB to XYZ (D65) matrix
    x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b
    y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b
    z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b

    def f(t: float) -> float:
        eps, kappa = 216 / 24389, 24389 / 27
        return t ** (1 / 3) if t > eps else (kappa * t + 16) / 116

    fx, fy, fz = f(x / 0.95047), f(y / 1.0), f(z / 1.08883)
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def reference_delta_e(a: tuple[int, int, int], b: tuple[int, int, int]) -> float:
    la, lb = reference_lab(a), reference_lab(b)
    return math.dist(la, lb)


# ---------------------------------------------------------------------------
# Exact k-means oracle
# ---------------------------------------------------------------------------


def _part_cost(labs: list[tuple[float, float, float]], weights: list[int], members: list[int]) -> float:
    """Weighted within-cluster sum of squared Lab distances to the mean."""
    total = 0.0
    sx = sy = sz = 0.0
    sq = 0.0
    for i in members:
        w = weights[i]
        x, y, z = labs[i]
        total += w
        sx += w * x
        sy += w * y
        sz += w * z
        sq += w * (x * x + y * y + z * z)
    return sq - (sx * sx + sy * sy + sz * sz) / total


def brute_force_kmeans_cost(
    colors: list[tuple[int, int, int]], multiplicities: list[int], k: int
) -> float:
    """Exact minimum k-means cost over all partitions into <= k clusters."""
    n = len(colors)
    labs = [reference_lab(c) for c in colors]
    if n <= k:
        return 0.0
    best = math.inf

    def recurse(i: int, parts: list[list[int]], cost_so_far: float):
        nonlocal best
        if cost_so_far >= best:
            return
        if i == n:
            best = cost_so_far
            return
        for part in parts:
            old = _part_cost(labs, multiplicities, part)
            part.append(i)
            new = _part_cost(labs, multiplicities, part)
            recurse(i + 1, parts, cost_so_far - old + new)
            part.pop()
        if len(parts) < k:
            parts.append([i])
            recurse(i + 1, parts, cost_so_far)
            parts.pop()

    recurse(0, [], 0.0)
    return best


def assignment_cost(
    pixel_labs: np.ndarray, counts: np.ndarray, centroid_labs: np.ndarray
) -> float:
    """Cost of assigning each (weighted) Lab point to its nearest centroid."""
    d2 = np.sum((pixel_labs[:, None, :] - centroid_labs[None, :, :]) ** 2, axis=2)
    return float(np.sum(counts * d2.min(axis=1)))


def separated_colors(rng: np.random.Generator, n: int, min_delta_e: float = 20.0) -> list[tuple[int, int, int]]:
    """Random RGB colors pairwise at least ``min_delta_e`` apart in Lab."""
    out: list[tuple[int, int, int]] = []
    while len(out) < n:
        cand = tuple(int(v) for v in rng.integers(0, 256, size=3))
        if all(reference_delta_e(cand, c) >= min_delta_e for c in out):
            out.append(cand)
    return out


@dataclass
class ColorCase:
    colors: list[tuple[int, int, int]]
    multiplicities: list[int]
    k: int

    def pixels(self, rng: np.random.Generator) -> np.ndarray:
        rows = [
            np.tile(np.array(c, dtype=np.uint8), (m, 1))
            for c, m in zip(self.colors, self.multiplicities)
        ]
        arr = np.concatenate(rows, axis=0)
        rng.shuffle(arr, axis=0)
        return arr


def color_suite(seed: int = 1234, size: int = 210) -> list[ColorCase]:
    """Synthetic clustering cases: <= 8 distinct colors, <= 64 pixels."""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(size):
        n = int(rng.integers(2, 9))
        colors = separated_colors(rng, n)
        budget = int(rng.integers(n, 65))
        mult = np.ones(n, dtype=int)
        for _ in range(budget - n):
            mult[rng.integers(0, n)] += 1
        cases.append(ColorCase(colors, mult.tolist(), k=int(rng.integers(2, 7))))
    return cases


# ---------------------------------------------------------------------------
# Random boards and lexicons
# ---------------------------------------------------------------------------


def checker_image(rng: np.random.Generator, h: int = 40, w: int = 48) -> np.ndarray:
    colors = rng.integers(0, 256, size=(2, 3)).astype(np.uint8)
    yy, xx = np.mgrid[:h, :w]
    return colors[((yy // 8) + (xx // 8)) % 2]


def uniform_image(color: tuple[int, int, int], h: int = 32, w: int = 32) -> np.ndarray:
    return np.full((h, w, 3), color, dtype=np.uint8)


def small_rect(rng: np.random.Generator, max_wh: float = 0.3) -> NormRect:
    w = float(rng.uniform(0.02, max_wh))
    h = float(rng.uniform(0.02, max_wh))
    x = float(rng.uniform(0.0, 1.0 - w))
    y = float(rng.uniform(0.0, 1.0 - h))
    return NormRect(x, y, w, h)


@dataclass
class BoardRoles:
    board: MoodBoard
    subjects: list[str] = field(default_factory=list)
    colors: list[str] = field(default_factory=list)
    styles: list[str] = field(default_factory=list)
    concepts: list[str] = field(default_factory=list)


def build_random_board(seed: int = 7) -> BoardRoles:
    """A board with a few of every token kind, deterministic per seed."""
    from lexcraft import raster

    rng = np.random.default_rng(seed)
    board = MoodBoard(clock=lambda: 0.0)
    roles = BoardRoles(board)
    for _ in range(3):
        ref = board.add_image(raster.encode_png(checker_image(rng)))
        token = board.create_subject_token(
            ref.image_id, NormRect(0.1, 0.1, 0.65, 0.7)
        )
        roles.subjects.append(token.token_id)
    palette_img = board.add_image(raster.encode_png(uniform_image((180, 40, 90))))
    for color in separated_colors(rng, 6):
        roles.colors.append(board.create_color_token(Rgb(*color)).token_id)
    for _ in range(2):
        roles.styles.append(board.create_style_token(palette_img.image_id).token_id)
    roles.concepts.append(board.create_concept_token(palette_img.image_id).token_id)
    return roles


_WORDS = ("calm", "sunlit", "dense fog", "playful mood", "sharp shadows", "soft focus")


def random_valid_lexicon(rng: np.random.Generator, roles: BoardRoles) -> VisualLexicon:
    """A lexicon that always passes validation (warnings allowed)."""
    board = roles.board
    lex = VisualLexicon("lex_rand")
    subject_ids = []
    names = []
    for i in range(int(rng.integers(1, 5))):
        token = board.get_token(roles.subjects[int(rng.integers(len(roles.subjects)))])
        sid = lex.place_copy(token, small_rect(rng, 0.45))
        subject_ids.append(sid)
        if rng.random() < 0.7:
            name = f"s{i}"
            lex.set_name(sid, name)
            names.append(name)

    placed_modifiers = []
    for _ in range(int(rng.integers(0, 5))):
        token = board.get_token(roles.colors[int(rng.integers(len(roles.colors)))])
        placed_modifiers.append(lex.place_copy(token, small_rect(rng, 0.2)))
    for _ in range(int(rng.integers(0, 3))):
        token = board.get_token(roles.styles[int(rng.integers(len(roles.styles)))])
        placed_modifiers.append(lex.place_copy(token, small_rect(rng, 0.2)))
    for _ in range(int(rng.integers(0, 4))):
        text = str(rng.choice(_WORDS))
        if names and rng.random() < 0.5:
            text += f" #{names[int(rng.integers(len(names)))]}"
        placed_modifiers.append(lex.create_textual(text, (float(rng.random()), float(rng.random()))))
    for _ in range(int(rng.integers(0, 3))):
        level = ("small", "medium", "large")[int(rng.integers(3))]
        placed_modifiers.append(
            lex.create_imaginative(ImaginationLevel(level), (float(rng.random()), float(rng.random())))
        )

    ungrouped = list(placed_modifiers)
    if len(ungrouped) >= 2 and rng.random() < 0.4:
        take = int(rng.integers(2, len(ungrouped) + 1))
        members = [ungrouped.pop(int(rng.integers(len(ungrouped)))) for _ in range(take)]
        gid = lex.group(members)
        if rng.random() < 0.5:
            lex.link(gid, subject_ids[int(rng.integers(len(subject_ids)))])

    for mid in ungrouped:
        if rng.random() < 0.4:
            lex.link(mid, subject_ids[int(rng.integers(len(subject_ids)))])
    return lex
