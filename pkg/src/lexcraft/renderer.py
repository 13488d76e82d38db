"""Execute a compiled plan stage by stage through a pluggable backend.

The default backend is a deterministic compositor: it pastes masked subject
crops onto a white canvas, leaves style as an identity pass (recording the
requested blend as metadata), and realizes both color stages with
proportional palette quantization. Swapping in a generative backend changes
pixels, never the stage protocol.

Every executed stage's output image is kept so callers can show intermediate
results, and a failure mid-pipeline surfaces the partial artifact.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from . import canon, raster
from .colorlab import QuantizeMode, quantize_to_palette
from .compiler import (
    ExecutionPlan,
    GlobalColorStage,
    LayoutStage,
    LocalColorStage,
    STAGE_ORDER,
    StyleStage,
)
from .errors import BackendError, KindMismatch
from .moodboard import DEFAULT_SEED, MoodBoard, TokenKind

ARTIFACT_SCHEMA = "artifact/1"
DEFAULT_CANVAS = (1024, 1024)
MIN_CANVAS = 64


@dataclass
class RenderContext:
    """Carries the knobs shared by all stages of one render: canvas size in
    (width, height), the seed threaded through every stage, and a metadata
    sink the backend may write to."""

    canvas: tuple[int, int]
    seed: int
    rng: np.random.Generator
    metadata: dict = field(default_factory=dict)


class GenerativeBackend(Protocol):
    """Stage seam. Implementations are called strictly in plan order and each
    stage receives the previous stage's output image."""

    def compose_layout(
        self, stage: LayoutStage, board: MoodBoard, ctx: RenderContext
    ) -> tuple[np.ndarray, dict[str, np.ndarray]]: ...

    def apply_style(
        self, image: np.ndarray, stage: StyleStage, board: MoodBoard, ctx: RenderContext
    ) -> np.ndarray: ...

    def apply_global_colors(
        self, image: np.ndarray, stage: GlobalColorStage, ctx: RenderContext
    ) -> np.ndarray: ...

    def apply_local_colors(
        self,
        image: np.ndarray,
        masks: dict[str, np.ndarray],
        stage: LocalColorStage,
        ctx: RenderContext,
    ) -> np.ndarray: ...


class CompositorBackend:
    """Deterministic default: direct compositing plus palette quantization.

    A pure function of (plan, board pixels, canvas, seed); goldens depend on
    that, so resampling goes through raster.bilinear_resize rather than any
    library resizer.
    """

    def compose_layout(self, stage, board, ctx):
        width, height = ctx.canvas
        image = np.full((height, width, 3), 255, dtype=np.uint8)
        masks: dict[str, np.ndarray] = {}
        for placement in stage.placements:
            token = board.get_token(placement.source_token_id)
            if token.kind != TokenKind.SUBJECT:
                raise KindMismatch(
                    f"placement {placement.instance_id} sources {token.token_id}, "
                    f"a {token.kind.value} token"
                )
            full = board.pixels(token.image_id)
            cx0, cy0, cx1, cy1 = token.bbox.to_pixels(full.shape[1], full.shape[0])
            crop = full[cy0:cy1, cx0:cx1]
            x0, y0, x1, y1 = placement.bbox.to_pixels(width, height)
            scaled = raster.bilinear_resize(crop, y1 - y0, x1 - x0)
            scaled_mask = raster.nearest_resize_mask(token.mask, y1 - y0, x1 - x0)
            region = image[y0:y1, x0:x1]
            region[scaled_mask] = scaled[scaled_mask]

            placed = np.zeros((height, width), dtype=bool)
            placed[y0:y1, x0:x1] = scaled_mask
            # later placements draw over earlier ones, so clip hidden pixels
            for prior in masks.values():
                prior &= ~placed
            masks[placement.instance_id] = placed
        ctx.metadata["background_prompt"] = stage.background_prompt
        ctx.metadata["placement_prompts"] = {
            p.instance_id: p.prompt for p in stage.placements
        }
        return image, masks

    def apply_style(self, image, stage, board, ctx):
        ctx.metadata["style"] = [
            {"source_token_id": t, "weight": w} for t, w in stage.entries
        ]
        return image

    def apply_global_colors(self, image, stage, ctx):
        return quantize_to_palette(image, stage.palette, QuantizeMode.PROPORTIONAL)

    def apply_local_colors(self, image, masks, stage, ctx):
        out = image.copy()
        for entry in stage.entries:
            mask = masks[entry.subject_instance_id]
            out = quantize_to_palette(
                out, entry.palette, QuantizeMode.PROPORTIONAL, mask=mask
            )
        return out


@dataclass
class RenderArtifact:
    """Everything one render produced: each stage's output image (in executed
    order), the rendered per-subject masks, and enough metadata to replay or
    audit the run."""

    plan_hash: str
    canvas: tuple[int, int]
    seed: int
    stage_names: list[str]
    stage_images: list[np.ndarray]
    masks: dict[str, np.ndarray]
    timings: list[float]
    metadata: dict

    @property
    def final(self) -> np.ndarray:
        return self.stage_images[-1]

    def stage_filenames(self) -> list[str]:
        return [f"stage_{i}_{name}.png" for i, name in enumerate(self.stage_names)]

    def manifest(self) -> dict:
        return {
            "schema": ARTIFACT_SCHEMA,
            "plan_hash": self.plan_hash,
            "canvas": list(self.canvas),
            "seed": self.seed,
            "stages": [
                {"index": i, "stage": name, "file": file, "seconds": round(sec, 6)}
                for i, (name, file, sec) in enumerate(
                    zip(self.stage_names, self.stage_filenames(), self.timings)
                )
            ],
            "metadata": self.metadata,
        }

    def export(self, directory: str | Path) -> Path:
        """Write stage_<i>_<name>.png for every executed stage, final.png,
        and artifact.json into ``directory``."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        for file, image in zip(self.stage_filenames(), self.stage_images):
            (out / file).write_bytes(raster.encode_png(image))
        (out / "final.png").write_bytes(raster.encode_png(self.final))
        (out / "artifact.json").write_text(canon.dumps(self.manifest()), encoding="utf-8")
        return out


def _fail(stage_name: str, reason: str, partial: RenderArtifact | None) -> BackendError:
    err = BackendError(f"stage {stage_name} failed: {reason}", stage=stage_name)
    err.stage = stage_name
    err.artifact = partial
    return err


def render(
    plan: ExecutionPlan,
    board: MoodBoard,
    backend: GenerativeBackend | None = None,
    canvas: tuple[int, int] = DEFAULT_CANVAS,
    seed: int = DEFAULT_SEED,
) -> RenderArtifact:
    """Run every plan stage in order and collect intermediates.

    A stage failure raises BackendError naming the stage, with the partial
    artifact (all completed stages) attached as ``.artifact``.
    """
    width, height = canvas
    if width < MIN_CANVAS or height < MIN_CANVAS:
        raise ValueError(f"canvas {width}x{height} below minimum {MIN_CANVAS}x{MIN_CANVAS}")
    if not plan.check_order():
        raise _fail(
            plan.stages[0].stage if plan.stages else "layout",
            f"stage sequence {plan.stage_names()} is not an in-order subset of {list(STAGE_ORDER)}",
            None,
        )

    backend = backend if backend is not None else CompositorBackend()
    ctx = RenderContext(
        canvas=(width, height), seed=seed, rng=np.random.default_rng(seed)
    )
    ctx.metadata["backend"] = type(backend).__name__

    names: list[str] = []
    images: list[np.ndarray] = []
    timings: list[float] = []
    masks: dict[str, np.ndarray] = {}

    def partial() -> RenderArtifact | None:
        if not images:
            return None
        return RenderArtifact(
            plan_hash=plan.plan_hash,
            canvas=(width, height),
            seed=seed,
            stage_names=list(names),
            stage_images=list(images),
            masks=masks,
            timings=list(timings),
            metadata=dict(ctx.metadata),
        )

    current: np.ndarray | None = None
    for stage in plan.stages:
        started = time.perf_counter()
        try:
            if isinstance(stage, LayoutStage):
                current, masks = backend.compose_layout(stage, board, ctx)
            elif isinstance(stage, StyleStage):
                current = backend.apply_style(current, stage, board, ctx)
            elif isinstance(stage, GlobalColorStage):
                current = backend.apply_global_colors(current, stage, ctx)
            elif isinstance(stage, LocalColorStage):
                current = backend.apply_local_colors(current, masks, stage, ctx)
            else:
                raise TypeError(f"unknown stage type {type(stage).__name__}")
        except Exception as exc:
            raise _fail(stage.stage, str(exc), partial()) from exc
        names.append(stage.stage)
        images.append(np.asarray(current))
        timings.append(time.perf_counter() - started)

    return partial()
