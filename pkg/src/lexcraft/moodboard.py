"""Reference-image registry and factory of persistent source tokens.

Source tokens are the durable vocabulary a designer builds from reference
images: subjects cut out by bounding box, dominant or hand-picked colors,
styles, and concept keywords. They are immutable once created (recoloring a
color token is the single sanctioned mutation) and survive any amount of
panel editing.

The model-backed steps (segmentation, style preview, keyword summarization)
sit behind provider interfaces with deterministic offline defaults, so every
contract here holds without network access or model weights.
"""

from __future__ import annotations

import colorsys
import hashlib
import math
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Protocol

import numpy as np

from . import canon, raster
from .colorlab import Rgb, kmeans_palette, rgb_array_to_lab
from .errors import (
    EmptyKeywords,
    EmptyMask,
    InvalidRect,
    KindMismatch,
    ProviderError,
    UnknownImage,
    UnknownToken,
)

DEFAULT_SEED = 0xB21C
THUMBNAIL_MAX_DIM = 64
STYLE_THUMBNAIL_SIZE = 64
MAX_KEYWORDS = 5
AUTO_PALETTE_SIZE = 5


@dataclass(frozen=True)
class NormRect:
    """A rectangle in normalized [0, 1] surface coordinates."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        eps = 1e-9
        ok = (
            self.x >= -eps
            and self.y >= -eps
            and self.w > 0
            and self.h > 0
            and self.x + self.w <= 1.0 + eps
            and self.y + self.h <= 1.0 + eps
        )
        if not ok:
            raise InvalidRect(f"invalid normalized rect x={self.x} y={self.y} w={self.w} h={self.h}")

    def area(self) -> float:
        return self.w * self.h

    def to_doc(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_doc(cls, doc: dict) -> "NormRect":
        return cls(float(doc["x"]), float(doc["y"]), float(doc["w"]), float(doc["h"]))

    def to_pixels(self, width: int, height: int) -> tuple[int, int, int, int]:
        """Pixel box (x0, y0, x1, y1), end-exclusive, at least 1x1."""
        x0 = max(0, math.floor(self.x * width))
        y0 = max(0, math.floor(self.y * height))
        x1 = min(width, max(x0 + 1, math.ceil((self.x + self.w) * width)))
        y1 = min(height, max(y0 + 1, math.ceil((self.y + self.h) * height)))
        return x0, y0, x1, y1

    def iou(self, other: "NormRect") -> float:
        ix = max(0.0, min(self.x + self.w, other.x + other.w) - max(self.x, other.x))
        iy = max(0.0, min(self.y + self.h, other.y + other.h) - max(self.y, other.y))
        inter = ix * iy
        union = self.area() + other.area() - inter
        return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class ImageRef:
    image_id: str
    width: int
    height: int
    content_hash: str

    def to_doc(self) -> dict:
        return {
            "image_id": self.image_id,
            "width": self.width,
            "height": self.height,
            "content_hash": self.content_hash,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ImageRef":
        return cls(doc["image_id"], int(doc["width"]), int(doc["height"]), doc["content_hash"])


class TokenKind(Enum):
    SUBJECT = "subject"
    COLOR = "color"
    STYLE = "style"
    CONCEPT = "concept"


class ColorOrigin(Enum):
    AUTO_KMEANS = "auto_kmeans"
    EYEDROPPER = "eyedropper"
    MANUAL = "manual"


@dataclass(frozen=True)
class SourceToken:
    """A persistent mood-board token. Payload fields depend on ``kind``."""

    token_id: str
    kind: TokenKind
    created_at: float
    image_id: str | None = None
    bbox: NormRect | None = None
    mask: np.ndarray | None = None          # subject: bool grid over the bbox pixel box
    thumbnail: np.ndarray | None = None     # subject: masked crop, max dim 64
    color: Rgb | None = None
    color_origin: ColorOrigin | None = None
    style_thumbnail: np.ndarray | None = None
    keywords: tuple[str, ...] | None = None

    def to_doc(self) -> dict:
        doc: dict = {
            "token_id": self.token_id,
            "kind": self.kind.value,
            "created_at": self.created_at,
        }
        if self.kind == TokenKind.SUBJECT:
            doc["image_id"] = self.image_id
            doc["bbox"] = self.bbox.to_doc()
            doc["mask_png_b64"] = raster.mask_to_b64(self.mask)
            doc["thumbnail_png_b64"] = raster.pixels_to_b64(self.thumbnail)
        elif self.kind == TokenKind.COLOR:
            doc["rgb"] = self.color.to_hex()
            doc["origin"] = self.color_origin.value
        elif self.kind == TokenKind.STYLE:
            doc["image_id"] = self.image_id
            doc["style_thumbnail_png_b64"] = raster.pixels_to_b64(self.style_thumbnail)
        else:
            doc["keywords"] = list(self.keywords)
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "SourceToken":
        kind = TokenKind(doc["kind"])
        base = dict(token_id=doc["token_id"], kind=kind, created_at=float(doc["created_at"]))
        if kind == TokenKind.SUBJECT:
            return cls(
                **base,
                image_id=doc["image_id"],
                bbox=NormRect.from_doc(doc["bbox"]),
                mask=raster.mask_from_b64(doc["mask_png_b64"]),
                thumbnail=raster.pixels_from_b64(doc["thumbnail_png_b64"]),
            )
        if kind == TokenKind.COLOR:
            return cls(**base, color=Rgb.from_hex(doc["rgb"]), color_origin=ColorOrigin(doc["origin"]))
        if kind == TokenKind.STYLE:
            return cls(
                **base,
                image_id=doc["image_id"],
                style_thumbnail=raster.pixels_from_b64(doc["style_thumbnail_png_b64"]),
            )
        return cls(**base, keywords=tuple(doc["keywords"]))


# ---------------------------------------------------------------------------
# Providers (model seams with deterministic offline defaults)
# ---------------------------------------------------------------------------


class SegmentationProvider(Protocol):
    def segment(self, crop: np.ndarray) -> np.ndarray:
        """Return a bool mask with the crop's (H, W) shape."""


class BboxSegmenter:
    """Default segmenter: the whole bounding box is the subject."""

    def segment(self, crop: np.ndarray) -> np.ndarray:
        return np.ones(crop.shape[:2], dtype=bool)


class StylePreviewProvider(Protocol):
    def preview(self, pixels: np.ndarray) -> np.ndarray:
        """Return a small RGB preview conveying the image's style."""


class DownscaleStyler:
    """Default style preview: a plain 64x64 downscale of the source image.

    Stands in for a style-transfer model; the engine only needs a stable
    thumbnail to show on the token.
    """

    def preview(self, pixels: np.ndarray) -> np.ndarray:
        return raster.bilinear_resize(pixels, STYLE_THUMBNAIL_SIZE, STYLE_THUMBNAIL_SIZE)


class KeywordProvider(Protocol):
    def keywords(self, pixels: np.ndarray) -> list[str]:
        """Return concept keywords for an image."""


class HueLightnessKeywords:
    """Offline keyword stub: warm/cool from mean hue, bright/dark from mean
    lightness. A placeholder for an LLM-backed provider."""

    def keywords(self, pixels: np.ndarray) -> list[str]:
        flat = pixels.reshape(-1, 3).astype(np.float64) / 255.0
        hues = np.array([colorsys.rgb_to_hsv(*px)[0] for px in flat]) * 360.0
        radians = np.deg2rad(hues)
        mean_angle = math.degrees(
            math.atan2(float(np.sin(radians).mean()), float(np.cos(radians).mean()))
        ) % 360.0
        mean_l = float(rgb_array_to_lab(pixels.reshape(-1, 3))[:, 0].mean())
        words = ["warm" if mean_angle < 90.0 or mean_angle >= 270.0 else "cool"]
        words.append("bright" if mean_l >= 50.0 else "dark")
        return words


# ---------------------------------------------------------------------------
# The registry
# ---------------------------------------------------------------------------


@dataclass
class _ImageRecord:
    ref: ImageRef
    pixels: np.ndarray | None


class MoodBoard:
    """Content-addressed image registry plus the source-token store.

    Writes are expected to be serialized by the owning session; reads hand
    out immutable values, so concurrent readers are safe.
    """

    def __init__(self, clock: Callable[[], float] = time.time):
        self._clock = clock
        self._images: dict[str, _ImageRecord] = {}
        self._tokens: dict[str, SourceToken] = {}
        self._token_seq = 0

    # -- images ------------------------------------------------------------

    def add_image(self, data: bytes) -> ImageRef:
        """Register raster bytes; identical pixel content yields the same id."""
        pixels = raster.decode_png(data)
        h, w = pixels.shape[:2]
        digest = hashlib.sha256()
        digest.update(w.to_bytes(4, "big"))
        digest.update(h.to_bytes(4, "big"))
        digest.update(pixels.tobytes())
        content_hash = digest.hexdigest()
        image_id = f"img_{content_hash[:16]}"
        if image_id not in self._images:
            self._images[image_id] = _ImageRecord(
                ImageRef(image_id, w, h, content_hash), pixels
            )
        return self._images[image_id].ref

    def get_image(self, image_id: str) -> ImageRef:
        rec = self._images.get(image_id)
        if rec is None:
            raise UnknownImage(f"no image {image_id!r}")
        return rec.ref

    def pixels(self, image_id: str) -> np.ndarray:
        rec = self._images.get(image_id)
        if rec is None:
            raise UnknownImage(f"no image {image_id!r}")
        if rec.pixels is None:
            raise UnknownImage(f"pixel data for {image_id!r} not loaded")
        return rec.pixels

    def images(self) -> list[ImageRef]:
        return [rec.ref for rec in self._images.values()]

    # -- tokens ------------------------------------------------------------

    def _next_token_id(self) -> str:
        self._token_seq += 1
        return f"tok_{self._token_seq:04d}"

    def create_subject_token(
        self,
        image_id: str,
        bbox: NormRect,
        segmenter: SegmentationProvider | None = None,
    ) -> SourceToken:
        pixels = self.pixels(image_id)
        x0, y0, x1, y1 = bbox.to_pixels(pixels.shape[1], pixels.shape[0])
        crop = pixels[y0:y1, x0:x1]
        segmenter = segmenter or BboxSegmenter()
        try:
            mask = np.asarray(segmenter.segment(crop), dtype=bool)
        except Exception as exc:  # provider boundary
            raise ProviderError(f"segmenter failed: {exc}") from exc
        if mask.shape != crop.shape[:2]:
            raise ProviderError(
                f"segmenter returned shape {mask.shape}, expected {crop.shape[:2]}"
            )
        if not mask.any():
            raise EmptyMask("segmenter returned an all-zero mask")

        masked = crop.copy()
        masked[~mask] = 255
        th, tw = raster.thumbnail_size(crop.shape[0], crop.shape[1], THUMBNAIL_MAX_DIM)
        thumbnail = raster.bilinear_resize(masked, th, tw)

        token = SourceToken(
            token_id=self._next_token_id(),
            kind=TokenKind.SUBJECT,
            created_at=self._clock(),
            image_id=image_id,
            bbox=bbox,
            mask=mask,
            thumbnail=thumbnail,
        )
        self._tokens[token.token_id] = token
        return token

    def extract_color_tokens(
        self, image_id: str, k: int = AUTO_PALETTE_SIZE, seed: int = DEFAULT_SEED
    ) -> list[SourceToken]:
        """Auto-extract the image's dominant colors as color tokens."""
        pixels = self.pixels(image_id)
        palette = kmeans_palette(pixels, k=k, seed=seed)
        tokens = []
        for color, _weight in palette:
            tokens.append(self._store_color(color, ColorOrigin.AUTO_KMEANS))
        return tokens

    def create_color_token(self, color: Rgb, origin: ColorOrigin = ColorOrigin.MANUAL) -> SourceToken:
        return self._store_color(color, origin)

    def _store_color(self, color: Rgb, origin: ColorOrigin) -> SourceToken:
        token = SourceToken(
            token_id=self._next_token_id(),
            kind=TokenKind.COLOR,
            created_at=self._clock(),
            color=color,
            color_origin=origin,
        )
        self._tokens[token.token_id] = token
        return token

    def recolor_token(self, token_id: str, color: Rgb) -> SourceToken:
        """The one sanctioned SourceToken mutation; origin is preserved."""
        token = self.get_token(token_id)
        if token.kind != TokenKind.COLOR:
            raise KindMismatch(f"{token_id} is a {token.kind.value} token, not a color")
        updated = replace(token, color=color)
        self._tokens[token_id] = updated
        return updated

    def create_style_token(
        self, image_id: str, styler: StylePreviewProvider | None = None
    ) -> SourceToken:
        pixels = self.pixels(image_id)
        styler = styler or DownscaleStyler()
        try:
            preview = np.asarray(styler.preview(pixels), dtype=np.uint8)
        except Exception as exc:
            raise ProviderError(f"style provider failed: {exc}") from exc
        token = SourceToken(
            token_id=self._next_token_id(),
            kind=TokenKind.STYLE,
            created_at=self._clock(),
            image_id=image_id,
            style_thumbnail=preview,
        )
        self._tokens[token.token_id] = token
        return token

    def create_concept_token(
        self, image_id: str, provider: KeywordProvider | None = None
    ) -> SourceToken:
        pixels = self.pixels(image_id)
        provider = provider or HueLightnessKeywords()
        try:
            words = list(provider.keywords(pixels))
        except Exception as exc:
            raise ProviderError(f"keyword provider failed: {exc}") from exc
        if not words:
            raise EmptyKeywords("keyword provider returned no keywords")
        token = SourceToken(
            token_id=self._next_token_id(),
            kind=TokenKind.CONCEPT,
            created_at=self._clock(),
            keywords=tuple(words[:MAX_KEYWORDS]),
        )
        self._tokens[token.token_id] = token
        return token

    def get_token(self, token_id: str) -> SourceToken:
        token = self._tokens.get(token_id)
        if token is None:
            raise UnknownToken(f"no token {token_id!r}")
        return token

    def tokens(self) -> list[SourceToken]:
        return list(self._tokens.values())

    # -- serialization -----------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "images": [rec.ref.to_doc() for rec in self._images.values()],
            "tokens": [t.to_doc() for t in self._tokens.values()],
        }

    def digest(self) -> str:
        return canon.digest(self.to_doc())

    @classmethod
    def from_doc(
        cls,
        doc: dict,
        pixel_lookup: dict[str, np.ndarray] | None = None,
        clock: Callable[[], float] = time.time,
    ) -> "MoodBoard":
        board = cls(clock=clock)
        pixel_lookup = pixel_lookup or {}
        for image_doc in doc.get("images", []):
            ref = ImageRef.from_doc(image_doc)
            board._images[ref.image_id] = _ImageRecord(ref, pixel_lookup.get(ref.image_id))
        max_seq = 0
        for token_doc in doc.get("tokens", []):
            token = SourceToken.from_doc(token_doc)
            board._tokens[token.token_id] = token
            suffix = token.token_id.rsplit("_", 1)[-1]
            if suffix.isdigit():
                max_seq = max(max_seq, int(suffix))
        board._token_seq = max_seq
        return board
