"""Offline file formats: a single lexicon bundle (board + panel in one
document, image pixels in sibling PNGs) and a board directory for feeding
the renderer.

Bundle layout, all paths relative to the bundle file:

    lexicon.json        {schema: "lexicon/1", board: {...}, panel: {...}}
    images/<id>.png     pixel data for each board image (optional per image)

Images may appear as bare content-hash refs with no path; that is enough to
validate and compile, but rendering needs the pixels.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import canon, raster
from .errors import DecodeError
from .lexicon import VisualLexicon
from .moodboard import MoodBoard

BUNDLE_SCHEMA = "lexicon/1"
BOARD_FILE = "board.json"


def bundle_doc(board: MoodBoard, lex: VisualLexicon, image_paths: dict[str, str]) -> dict:
    board_doc = board.to_doc()
    for image in board_doc["images"]:
        path = image_paths.get(image["image_id"])
        if path is not None:
            image["path"] = path
    return {"schema": BUNDLE_SCHEMA, "board": board_doc, "panel": lex.to_doc()}


def save_bundle(path: str | Path, board: MoodBoard, lex: VisualLexicon) -> Path:
    """Write <path> plus an images/ directory of PNGs beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image_dir = path.parent / "images"
    image_paths: dict[str, str] = {}
    for ref in board.images():
        image_dir.mkdir(parents=True, exist_ok=True)
        rel = f"images/{ref.image_id}.png"
        (path.parent / rel).write_bytes(raster.encode_png(board.pixels(ref.image_id)))
        image_paths[ref.image_id] = rel
    path.write_text(canon.dumps(bundle_doc(board, lex, image_paths)) + "\n", encoding="utf-8")
    return path


def load_bundle(path: str | Path) -> tuple[MoodBoard, VisualLexicon]:
    path = Path(path)
    doc = canon.loads(path.read_text(encoding="utf-8"))
    if doc.get("schema") != BUNDLE_SCHEMA:
        raise DecodeError(f"{path} is not a {BUNDLE_SCHEMA} bundle")
    pixels: dict[str, np.ndarray] = {}
    for image in doc["board"].get("images", []):
        rel = image.get("path")
        if rel:
            pixels[image["image_id"]] = raster.decode_png((path.parent / rel).read_bytes())
    board = MoodBoard.from_doc(doc["board"], pixel_lookup=pixels)
    lex = VisualLexicon.from_doc(doc["panel"])
    return board, lex


def save_board_dir(directory: str | Path, board: MoodBoard) -> Path:
    """Write board.json plus one PNG per image into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for ref in board.images():
        (directory / f"{ref.image_id}.png").write_bytes(
            raster.encode_png(board.pixels(ref.image_id))
        )
    (directory / BOARD_FILE).write_text(canon.dumps(board.to_doc()) + "\n", encoding="utf-8")
    return directory


def load_board_dir(directory: str | Path) -> MoodBoard:
    directory = Path(directory)
    doc = canon.loads((directory / BOARD_FILE).read_text(encoding="utf-8"))
    pixels: dict[str, np.ndarray] = {}
    for image in doc.get("images", []):
        png = directory / f"{image['image_id']}.png"
        if png.is_file():
            pixels[image["image_id"]] = raster.decode_png(png.read_bytes())
    return MoodBoard.from_doc(doc, pixel_lookup=pixels)
