"""Validate a visual lexicon against its mood board and compile it into an
ordered, deterministic execution plan.

The plan always runs layout first, then style, then global color, then local
color: style shifts colors, so color correction must come after it, and a
local palette must not be clobbered by a later global pass. Stages nothing
contributed to are omitted; layout is always present.

Weights inside one scope are proportional to instance rect areas. Prompt
fragments join in instance-creation order, with ``#name`` cross-references
rewritten to ``[subj:name]`` tags a backend can resolve against placements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from . import canon
from .colorlab import WeightedPalette, quantize_weights
from .errors import StrictWarnings, UnknownSource, ValidationFailed
from .lexicon import (
    ImaginationLevel,
    InstanceKind,
    TokenInstance,
    VisualLexicon,
    parse_cross_refs,
    CROSS_REF_PATTERN,
)
from .moodboard import MoodBoard, NormRect, TokenKind

PLAN_SCHEMA = "plan/1"

# Above this many subjects the generation backends degrade noticeably.
SUBJECT_SOFT_CAP = 6

# Subject boxes overlapping past this IoU tend to collapse into one another.
OVERLAP_IOU_LIMIT = 0.7

STAGE_ORDER = ("layout", "style", "global_color", "local_color")


@dataclass(frozen=True)
class Diagnostic:
    """A validation finding. ``E###`` codes block compilation; ``W###`` codes
    warn (and block only under strict mode)."""

    code: str
    message: str
    ids: tuple[str, ...] = ()

    @property
    def is_error(self) -> bool:
        return self.code.startswith("E")

    def to_doc(self) -> dict:
        return {"code": self.code, "message": self.message, "ids": list(self.ids)}


DIAGNOSTIC_CODES = {
    "E001": "unresolved cross-reference",
    "E002": "dangling document reference",
    "E101": "empty lexicon: no subject and no background text",
    "W001": f"more than {SUBJECT_SOFT_CAP} subjects",
    "W002": "more than one style instance",
    "W003": f"subject pair overlaps with IoU > {OVERLAP_IOU_LIMIT}",
    "W004": "multiple imaginative tokens on one target (max level wins)",
    "W005": "style linked to a subject is applied globally",
}


@dataclass(frozen=True)
class SubjectPlacement:
    instance_id: str
    source_token_id: str
    bbox: NormRect
    prompt: str
    name: str | None = None

    def to_doc(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "source_token_id": self.source_token_id,
            "bbox": self.bbox.to_doc(),
            "prompt": self.prompt,
            "name": self.name,
        }


@dataclass(frozen=True)
class LayoutStage:
    background_prompt: str
    placements: tuple[SubjectPlacement, ...]

    stage = "layout"

    def to_doc(self) -> dict:
        return {
            "stage": self.stage,
            "background_prompt": self.background_prompt,
            "placements": [p.to_doc() for p in self.placements],
        }


@dataclass(frozen=True)
class StyleStage:
    entries: tuple[tuple[str, float], ...]  # (style source token id, weight)

    stage = "style"

    def to_doc(self) -> dict:
        rounded = quantize_weights([w for _, w in self.entries])
        return {
            "stage": self.stage,
            "entries": [
                {"source_token_id": t, "weight": w}
                for (t, _), w in zip(self.entries, rounded)
            ],
        }


@dataclass(frozen=True)
class GlobalColorStage:
    palette: WeightedPalette

    stage = "global_color"

    def to_doc(self) -> dict:
        return {"stage": self.stage, "palette": self.palette.to_doc()}


@dataclass(frozen=True)
class LocalColorEntry:
    subject_instance_id: str
    placement_index: int
    palette: WeightedPalette

    def to_doc(self) -> dict:
        return {
            "subject_instance_id": self.subject_instance_id,
            "placement_index": self.placement_index,
            "palette": self.palette.to_doc(),
        }


@dataclass(frozen=True)
class LocalColorStage:
    entries: tuple[LocalColorEntry, ...]

    stage = "local_color"

    def to_doc(self) -> dict:
        return {"stage": self.stage, "entries": [e.to_doc() for e in self.entries]}


Stage = LayoutStage | StyleStage | GlobalColorStage | LocalColorStage


@dataclass
class ExecutionPlan:
    stages: tuple[Stage, ...]
    plan_hash: str = field(default="")

    def __post_init__(self):
        if not self.plan_hash:
            self.plan_hash = compute_plan_hash(self.stages)

    def stage_names(self) -> list[str]:
        return [s.stage for s in self.stages]

    def layout(self) -> LayoutStage:
        return self.stages[0]  # validated: layout is always first

    def get_stage(self, name: str) -> Stage | None:
        for s in self.stages:
            if s.stage == name:
                return s
        return None

    def check_order(self) -> bool:
        names = self.stage_names()
        positions = [STAGE_ORDER.index(n) for n in names if n in STAGE_ORDER]
        return (
            len(names) == len(positions)
            and positions == sorted(positions)
            and len(set(positions)) == len(positions)
            and bool(names)
            and names[0] == "layout"
        )

    def to_doc(self) -> dict:
        return {
            "schema": PLAN_SCHEMA,
            "stages": [s.to_doc() for s in self.stages],
            "plan_hash": self.plan_hash,
        }

    def canonical_bytes(self) -> bytes:
        return canon.dump_bytes(self.to_doc())

    @classmethod
    def from_doc(cls, doc: dict, verify_hash: bool = True) -> "ExecutionPlan":
        stages: list[Stage] = []
        for stage_doc in doc["stages"]:
            name = stage_doc["stage"]
            if name == "layout":
                stages.append(
                    LayoutStage(
                        background_prompt=stage_doc["background_prompt"],
                        placements=tuple(
                            SubjectPlacement(
                                instance_id=p["instance_id"],
                                source_token_id=p["source_token_id"],
                                bbox=NormRect.from_doc(p["bbox"]),
                                prompt=p["prompt"],
                                name=p.get("name"),
                            )
                            for p in stage_doc["placements"]
                        ),
                    )
                )
            elif name == "style":
                stages.append(
                    StyleStage(
                        entries=tuple(
                            (e["source_token_id"], float(e["weight"]))
                            for e in stage_doc["entries"]
                        )
                    )
                )
            elif name == "global_color":
                stages.append(GlobalColorStage(palette=WeightedPalette.from_doc(stage_doc["palette"])))
            elif name == "local_color":
                stages.append(
                    LocalColorStage(
                        entries=tuple(
                            LocalColorEntry(
                                subject_instance_id=e["subject_instance_id"],
                                placement_index=int(e["placement_index"]),
                                palette=WeightedPalette.from_doc(e["palette"]),
                            )
                            for e in stage_doc["entries"]
                        )
                    )
                )
            else:
                raise ValueError(f"unknown stage {name!r}")
        plan = cls(stages=tuple(stages), plan_hash=doc.get("plan_hash", ""))
        if verify_hash and doc.get("plan_hash") and doc["plan_hash"] != compute_plan_hash(plan.stages):
            raise ValueError("plan_hash does not match plan content")
        return plan


def compute_plan_hash(stages: tuple[Stage, ...]) -> str:
    return canon.digest({"schema": PLAN_SCHEMA, "stages": [s.to_doc() for s in stages]})


# ---------------------------------------------------------------------------
# Prompt extension
# ---------------------------------------------------------------------------


class PromptExtender(Protocol):
    def extend(self, text: str, level: ImaginationLevel) -> str:
        """Elaborate ``text`` with the given amount of invention."""


class DirectiveExtender:
    """Offline default: append a canonical ``[imagine:<level>]`` directive so
    downstream backends (or a language model) receive the requested level."""

    def extend(self, text: str, level: ImaginationLevel) -> str:
        directive = f"[imagine:{level.value}]"
        return f"{text} {directive}" if text else directive


def extend_prompt(
    text: str,
    level: ImaginationLevel | None,
    provider: PromptExtender | None = None,
) -> str:
    """With no imagination requested, only the factual text passes through."""
    if level is None or level == ImaginationLevel.NONE:
        return text
    return (provider or DirectiveExtender()).extend(text, level)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _subject_names(lex: VisualLexicon) -> set[str]:
    return {
        name
        for name, iid in lex.names.items()
        if iid in lex.instances and lex.instances[iid].kind == InstanceKind.SUBJECT
    }


def _linked_modifier_ids(lex: VisualLexicon) -> set[str]:
    """Instance ids whose scope is local (directly linked or in a linked group)."""
    local: set[str] = set()
    for ln in lex.links.values():
        if ln.modifier in lex.groups:
            local.update(lex.groups[ln.modifier].members)
        else:
            local.add(ln.modifier)
    return local


def validate(lex: VisualLexicon, board: MoodBoard | None = None) -> list[Diagnostic]:
    """Full-document diagnostics, deterministically ordered by (code, ids)."""
    diags: list[Diagnostic] = []
    subjects = lex.subjects_in_order()
    subject_name_set = _subject_names(lex)

    for inst in lex.instances.values():
        if inst.kind != InstanceKind.TEXTUAL:
            continue
        seen: set[str] = set()
        for ref in parse_cross_refs(inst.text or ""):
            if ref in subject_name_set or ref in seen:
                continue
            seen.add(ref)
            if ref in lex.names:
                msg = f"#{ref} names {lex.names[ref]}, which is not a subject"
            else:
                msg = f"#{ref} does not match any named instance"
            diags.append(Diagnostic("E001", msg, (inst.instance_id,)))

    for problem in lex.check_integrity():
        head = problem.split()[1] if len(problem.split()) > 1 else ""
        diags.append(Diagnostic("E002", problem, (head,)))

    has_background_text = any(
        i.kind == InstanceKind.TEXTUAL and i.instance_id not in _linked_modifier_ids(lex)
        for i in lex.instances.values()
    )
    if not subjects and not has_background_text:
        diags.append(Diagnostic("E101", DIAGNOSTIC_CODES["E101"]))

    if len(subjects) > SUBJECT_SOFT_CAP:
        diags.append(
            Diagnostic(
                "W001",
                f"{len(subjects)} subjects placed; backends support at most {SUBJECT_SOFT_CAP}",
                tuple(s.instance_id for s in subjects),
            )
        )

    styles = [i for i in lex.instances.values() if i.kind == InstanceKind.STYLE]
    if len(styles) > 1:
        diags.append(
            Diagnostic(
                "W002",
                f"{len(styles)} style instances; styles blend by weight",
                tuple(s.instance_id for s in styles),
            )
        )

    for i, a in enumerate(subjects):
        for b in subjects[i + 1 :]:
            iou = a.rect.iou(b.rect)
            if iou > OVERLAP_IOU_LIMIT:
                diags.append(
                    Diagnostic(
                        "W003",
                        f"subjects overlap with IoU {iou:.2f}; generation may merge them",
                        (a.instance_id, b.instance_id),
                    )
                )

    imag_by_target: dict[str, list[str]] = {}
    for inst in lex.instances.values():
        if inst.kind != InstanceKind.IMAGINATIVE:
            continue
        targets = [
            ln.target
            for ln in lex.links.values()
            if ln.modifier == inst.instance_id
            or (ln.modifier in lex.groups and inst.instance_id in lex.groups[ln.modifier].members)
        ]
        for target in targets or ["background"]:
            imag_by_target.setdefault(target, []).append(inst.instance_id)
    for target in sorted(imag_by_target):
        ids = imag_by_target[target]
        if len(ids) > 1:
            diags.append(
                Diagnostic(
                    "W004",
                    f"{len(ids)} imaginative tokens target {target}; the largest level wins",
                    tuple(sorted(ids)),
                )
            )

    for ln in lex.links.values():
        mod = lex.instances.get(ln.modifier)
        if mod is not None and mod.kind == InstanceKind.STYLE:
            diags.append(
                Diagnostic(
                    "W005",
                    f"style {ln.modifier} linked to {ln.target}; no local-style stage exists, treating as global",
                    (ln.link_id,),
                )
            )

    return sorted(diags, key=lambda d: (d.code, d.ids))


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def _substitute_refs(text: str) -> str:
    return CROSS_REF_PATTERN.sub(lambda m: f"[subj:{m.group(1)}]", text)


def _targets_of(lex: VisualLexicon, instance_id: str) -> list[str]:
    """Subject ids this modifier applies to; empty means global scope."""
    targets = []
    for ln in lex.links.values():
        if ln.modifier == instance_id:
            targets.append(ln.target)
        elif ln.modifier in lex.groups and instance_id in lex.groups[ln.modifier].members:
            targets.append(ln.target)
    return targets


def _color_value(board: MoodBoard, inst: TokenInstance):
    token = board.get_token(inst.origin)
    if token.kind != TokenKind.COLOR:
        raise UnknownSource(f"instance {inst.instance_id} origin {inst.origin} is not a color token")
    return token.color


def compile_lexicon(
    lex: VisualLexicon,
    board: MoodBoard,
    strict: bool = False,
    extender: PromptExtender | None = None,
) -> ExecutionPlan:
    """Compile a validated lexicon into an ExecutionPlan.

    Raises ValidationFailed when any error diagnostic is present, or
    StrictWarnings when ``strict`` and any warning is present. Identical
    documents compile to byte-identical plans.
    """
    diags = validate(lex, board)
    errors = [d for d in diags if d.is_error]
    if errors:
        raise ValidationFailed(
            "; ".join(f"{d.code}: {d.message}" for d in errors),
            diagnostics=[d.to_doc() for d in diags],
        )
    if strict and diags:
        raise StrictWarnings(
            "; ".join(f"{d.code}: {d.message}" for d in diags),
            diagnostics=[d.to_doc() for d in diags],
        )

    subjects = lex.subjects_in_order()
    placement_index = {s.instance_id: i for i, s in enumerate(subjects)}

    subject_texts: dict[str, list[str]] = {s.instance_id: [] for s in subjects}
    background_texts: list[str] = []
    subject_colors: dict[str, list[tuple]] = {s.instance_id: [] for s in subjects}
    global_colors: list[tuple] = []
    subject_levels: dict[str, ImaginationLevel] = {}
    background_level: ImaginationLevel | None = None
    style_entries: list[tuple[str, float]] = []

    for inst in lex.instances.values():
        if inst.kind == InstanceKind.SUBJECT:
            continue
        targets = _targets_of(lex, inst.instance_id)
        if inst.kind == InstanceKind.TEXTUAL:
            text = _substitute_refs(inst.text or "")
            if targets:
                for t in targets:
                    subject_texts[t].append(text)
            else:
                background_texts.append(text)
        elif inst.kind == InstanceKind.COLOR:
            color = _color_value(board, inst)
            area = inst.rect.area()
            if targets:
                for t in targets:
                    subject_colors[t].append((color, area))
            else:
                global_colors.append((color, area))
        elif inst.kind == InstanceKind.IMAGINATIVE:
            if targets:
                for t in targets:
                    cur = subject_levels.get(t)
                    if cur is None or inst.level.rank > cur.rank:
                        subject_levels[t] = inst.level
            else:
                if background_level is None or inst.level.rank > background_level.rank:
                    background_level = inst.level
        elif inst.kind == InstanceKind.STYLE:
            # any linked style was already flagged W005; it still applies globally
            style_entries.append((inst.origin, inst.rect.area()))

    placements = []
    for s in subjects:
        prompt = "; ".join(subject_texts[s.instance_id])
        prompt = extend_prompt(prompt, subject_levels.get(s.instance_id), extender)
        placements.append(
            SubjectPlacement(
                instance_id=s.instance_id,
                source_token_id=s.origin,
                bbox=s.rect,
                prompt=prompt,
                name=lex.name_of(s.instance_id),
            )
        )

    background_prompt = extend_prompt("; ".join(background_texts), background_level, extender)
    stages: list[Stage] = [LayoutStage(background_prompt, tuple(placements))]

    if style_entries:
        total = sum(a for _, a in style_entries)
        weighted = sorted(
            ((tid, a / total) for tid, a in style_entries),
            key=lambda e: (-e[1], e[0]),
        )
        stages.append(StyleStage(entries=tuple(weighted)))

    if global_colors:
        stages.append(GlobalColorStage(palette=WeightedPalette.normalized(global_colors)))

    local_entries = [
        LocalColorEntry(
            subject_instance_id=sid,
            placement_index=placement_index[sid],
            palette=WeightedPalette.normalized(colors),
        )
        for sid, colors in subject_colors.items()
        if colors
    ]
    if local_entries:
        local_entries.sort(key=lambda e: e.placement_index)
        stages.append(LocalColorStage(entries=tuple(local_entries)))

    return ExecutionPlan(stages=tuple(stages))
