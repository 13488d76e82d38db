"""A deterministic sample scene: an owl and its car parked by a tree.

Everything here is synthesized with fixed integer geometry so the same
board, lexicon, plan, and rendered pixels fall out on every run. Tests use
it as the determinism golden, and the panel construction doubles as a wire
command log for exercising clients.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import raster
from .lexicon import VisualLexicon, apply_envelope
from .moodboard import MoodBoard, NormRect

# Panel rects: areas 0.01 / 0.0064 / 0.0036 give weights 0.50 / 0.32 / 0.18.
OWL_RECT = {"x": 0.15, "y": 0.30, "w": 0.25, "h": 0.35}
CAR_RECT = {"x": 0.45, "y": 0.55, "w": 0.40, "h": 0.28}
TREE_RECT = {"x": 0.72, "y": 0.10, "w": 0.22, "h": 0.30}
COLOR_RECTS = (
    {"x": 0.05, "y": 0.85, "w": 0.10, "h": 0.10},
    {"x": 0.17, "y": 0.85, "w": 0.08, "h": 0.08},
    {"x": 0.27, "y": 0.85, "w": 0.06, "h": 0.06},
)
STYLE_RECT = {"x": 0.85, "y": 0.85, "w": 0.12, "h": 0.12}

# Stripe heights out of 128 rows; shares survive the 1-in-4 sampling stride.
PARK_STRIPES = (
    (45, (200, 60, 50)),
    (32, (60, 140, 200)),
    (26, (240, 200, 80)),
    (15, (70, 160, 90)),
    (10, (90, 70, 120)),
)


def _disc(img: np.ndarray, cx: int, cy: int, r: int, color) -> None:
    yy, xx = np.ogrid[: img.shape[0], : img.shape[1]]
    img[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = color


def _ellipse(img: np.ndarray, cx: int, cy: int, rx: int, ry: int, color) -> None:
    yy, xx = np.ogrid[: img.shape[0], : img.shape[1]]
    img[((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0] = color


def owl_image() -> np.ndarray:
    """96x96: a brown owl on a pale blue sky."""
    img = np.full((96, 96, 3), (210, 230, 240), dtype=np.uint8)
    _ellipse(img, 48, 58, 20, 26, (150, 100, 60))
    _ellipse(img, 48, 64, 12, 16, (205, 170, 120))
    _disc(img, 48, 26, 16, (150, 100, 60))
    _disc(img, 41, 24, 5, (245, 240, 225))
    _disc(img, 55, 24, 5, (245, 240, 225))
    _disc(img, 41, 24, 2, (30, 25, 20))
    _disc(img, 55, 24, 2, (30, 25, 20))
    img[28:33, 46:51] = (220, 160, 60)
    return img


def street_image() -> np.ndarray:
    """120x160: a red car on a road with a tree to the right."""
    img = np.full((120, 160, 3), (228, 228, 228), dtype=np.uint8)
    img[96:120, :] = (170, 170, 170)
    img[72:94, 16:76] = (190, 40, 35)
    img[56:72, 30:62] = (160, 30, 28)
    img[60:70, 34:58] = (200, 220, 235)
    _disc(img, 30, 94, 7, (25, 25, 25))
    _disc(img, 62, 94, 7, (25, 25, 25))
    img[64:98, 120:130] = (110, 70, 40)
    _disc(img, 125, 44, 24, (60, 130, 60))
    return img


def park_image() -> np.ndarray:
    """128x128 horizontal color stripes; the demo's palette and style source."""
    img = np.zeros((128, 128, 3), dtype=np.uint8)
    row = 0
    for height, color in PARK_STRIPES:
        img[row : row + height, :] = color
        row += height
    return img


def build_owl_car_board(
    clock: Callable[[], float] = lambda: 0.0,
) -> tuple[MoodBoard, dict]:
    """Board with owl/car/tree subjects, five auto colors, and a style token.

    Returns the board and a role map naming each token id.
    """
    board = MoodBoard(clock=clock)
    img_owl = board.add_image(raster.encode_png(owl_image())).image_id
    img_street = board.add_image(raster.encode_png(street_image())).image_id
    img_park = board.add_image(raster.encode_png(park_image())).image_id

    owl = board.create_subject_token(img_owl, NormRect(0.25, 0.05, 0.50, 0.85))
    car = board.create_subject_token(img_street, NormRect(0.085, 0.42, 0.425, 0.45))
    tree = board.create_subject_token(img_street, NormRect(0.615, 0.145, 0.345, 0.72))
    colors = board.extract_color_tokens(img_park, k=5)
    style = board.create_style_token(img_park)

    roles = {
        "images": {"owl": img_owl, "street": img_street, "park": img_park},
        "owl": owl.token_id,
        "car": car.token_id,
        "tree": tree.token_id,
        "colors": [t.token_id for t in colors],
        "style": style.token_id,
    }
    return board, roles


def owl_car_envelopes(roles: dict) -> list[dict]:
    """The wire commands that build the demo panel, in order."""
    steps = [
        {"op": "place_copy", "args": {"source": roles["owl"], "rect": OWL_RECT}},
        {"op": "place_copy", "args": {"source": roles["car"], "rect": CAR_RECT}},
        {"op": "place_copy", "args": {"source": roles["tree"], "rect": TREE_RECT}},
        {"op": "set_name", "args": {"instance": "ins_0001", "name": "owl"}},
        {"op": "set_name", "args": {"instance": "ins_0002", "name": "car"}},
        {"op": "set_name", "args": {"instance": "ins_0003", "name": "tree"}},
        {"op": "place_copy", "args": {"source": roles["colors"][0], "rect": COLOR_RECTS[0]}},
        {"op": "place_copy", "args": {"source": roles["colors"][1], "rect": COLOR_RECTS[1]}},
        {"op": "place_copy", "args": {"source": roles["colors"][2], "rect": COLOR_RECTS[2]}},
        {"op": "group", "args": {"instances": ["ins_0004", "ins_0005", "ins_0006"]}},
        {"op": "place_copy", "args": {"source": roles["style"], "rect": STYLE_RECT}},
        {
            "op": "create_textual",
            "args": {"text": "standing behind #car, facing left", "pos": {"x": 0.05, "y": 0.20}},
        },
        {"op": "link", "args": {"modifier": "ins_0008", "target": "ins_0001"}},
        {"op": "create_imaginative", "args": {"level": "large", "pos": {"x": 0.72, "y": 0.42}}},
        {"op": "link", "args": {"modifier": "ins_0009", "target": "ins_0003"}},
        {"op": "create_textual", "args": {"text": "beautiful park", "pos": {"x": 0.50, "y": 0.05}}},
    ]
    return [
        {"op": step["op"], "args": step["args"], "expected_revision": i}
        for i, step in enumerate(steps)
    ]


def build_owl_car_scene(
    clock: Callable[[], float] = lambda: 0.0,
) -> tuple[MoodBoard, VisualLexicon, dict]:
    """Full demo state: board, panel built via the command log, role map."""
    board, roles = build_owl_car_board(clock=clock)
    lex = VisualLexicon("lex_0001")
    for envelope in owl_car_envelopes(roles):
        apply_envelope(lex, board, envelope)
    return board, lex, roles
