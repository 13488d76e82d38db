"""Small raster helpers shared by the mood board and the renderer.

The resampler is written out explicitly (rather than delegating to an image
library) so that scaled crops and masks are bit-reproducible and the golden
renders do not depend on a library's resampling internals.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError


def decode_png(data: bytes) -> np.ndarray:
    """Decode raster bytes to an (H, W, 3) uint8 RGB array. Alpha is dropped."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image bytes: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DecodeError(f"unsupported decoded shape {arr.shape}")
    return arr


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array (or (H, W) bool mask) as PNG bytes."""
    if pixels.dtype == bool:
        im = Image.fromarray(pixels.astype(np.uint8) * 255, mode="L")
    else:
        im = Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), mode="RGB")
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()


def mask_to_b64(mask: np.ndarray) -> str:
    return base64.b64encode(encode_png(mask.astype(bool))).decode("ascii")


def mask_from_b64(data: str) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"))
    with Image.open(io.BytesIO(raw)) as im:
        arr = np.asarray(im.convert("L"))
    return arr >= 128


def pixels_to_b64(pixels: np.ndarray) -> str:
    return base64.b64encode(encode_png(pixels)).decode("ascii")


def pixels_from_b64(data: str) -> np.ndarray:
    return decode_png(base64.b64decode(data.encode("ascii")))


def _sample_coords(out_size: int, in_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source index pairs and interpolation weights for one axis (align-centers)."""
    if in_size == 1:
        lo = np.zeros(out_size, dtype=np.intp)
        return lo, lo, np.zeros(out_size)
    pos = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    pos = np.clip(pos, 0.0, in_size - 1.0)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, in_size - 1)
    return lo, hi, pos - lo


def bilinear_resize(pixels: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample of an (H, W, 3) uint8 array to (out_h, out_w, 3)."""
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be >= 1")
    src = pixels.astype(np.float64)
    y_lo, y_hi, wy = _sample_coords(out_h, pixels.shape[0])
    x_lo, x_hi, wx = _sample_coords(out_w, pixels.shape[1])
    top = src[y_lo][:, x_lo] * (1 - wx)[None, :, None] + src[y_lo][:, x_hi] * wx[None, :, None]
    bot = src[y_hi][:, x_lo] * (1 - wx)[None, :, None] + src[y_hi][:, x_hi] * wx[None, :, None]
    out = top * (1 - wy)[:, None, None] + bot * wy[:, None, None]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def nearest_resize_mask(mask: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resample of an (H, W) bool mask; keeps it binary."""
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be >= 1")
    ys = np.minimum((np.arange(out_h) + 0.5) * (mask.shape[0] / out_h), mask.shape[0] - 1).astype(np.intp)
    xs = np.minimum((np.arange(out_w) + 0.5) * (mask.shape[1] / out_w), mask.shape[1] - 1).astype(np.intp)
    return mask[ys][:, xs]


def thumbnail_size(h: int, w: int, max_dim: int) -> tuple[int, int]:
    """Aspect-preserving size with the larger side clamped to ``max_dim``."""
    if max(h, w) <= max_dim:
        return h, w
    if h >= w:
        return max_dim, max(1, round(w * max_dim / h))
    return max(1, round(h * max_dim / w)), max_dim
