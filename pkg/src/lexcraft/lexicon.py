"""The manipulation-panel document: token instances, groups, links, names.

A VisualLexicon is a value-like document mutated only through its command
vocabulary. Every command validates fully before touching state, so a failed
command leaves the document byte-identical; every successful command bumps
the revision by exactly one. Placed instances are copies: nothing here can
reach back and alter a mood-board source token.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from . import canon
from .errors import (
    AlreadyGrouped,
    BadCommand,
    BadName,
    DuplicateLink,
    EmptyText,
    InvalidEndpoint,
    NameTaken,
    ResizeNotAllowed,
    RevisionConflict,
    SubjectInGroup,
    TooFewMembers,
    UnknownGroup,
    UnknownInstance,
    UnknownLink,
    UnknownOp,
    UnknownSource,
)
from .moodboard import MoodBoard, NormRect, SourceToken, TokenKind

NAME_PATTERN = re.compile(r"^[A-Za-z0-9_]+$")
CROSS_REF_PATTERN = re.compile(r"#([A-Za-z0-9_]+)")

# Imaginative tokens snap to one of three preset panel-area fractions.
IMAGINATIVE_AREAS = {"small": 0.004, "medium": 0.01, "large": 0.02}


class ImaginationLevel(Enum):
    NONE = "none"
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"

    @property
    def rank(self) -> int:
        return ("none", "small", "medium", "large").index(self.value)


def snap_level(area: float) -> ImaginationLevel:
    """Nearest preset area wins; ties go to the smaller level."""
    best = min(IMAGINATIVE_AREAS.items(), key=lambda kv: (abs(kv[1] - area), kv[1]))
    return ImaginationLevel(best[0])


class InstanceKind(Enum):
    SUBJECT = "subject"
    COLOR = "color"
    STYLE = "style"
    TEXTUAL = "textual"
    IMAGINATIVE = "imaginative"


_SIZED_KINDS = {InstanceKind.SUBJECT, InstanceKind.COLOR, InstanceKind.STYLE}


@dataclass
class TokenInstance:
    instance_id: str
    kind: InstanceKind
    position: tuple[float, float]
    origin: str | None = None
    rect: NormRect | None = None
    text: str | None = None
    level: ImaginationLevel | None = None

    def to_doc(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "kind": self.kind.value,
            "origin": self.origin,
            "position": {"x": self.position[0], "y": self.position[1]},
            "rect": self.rect.to_doc() if self.rect else None,
            "text": self.text,
            "level": self.level.value if self.level else None,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "TokenInstance":
        return cls(
            instance_id=doc["instance_id"],
            kind=InstanceKind(doc["kind"]),
            position=(float(doc["position"]["x"]), float(doc["position"]["y"])),
            origin=doc.get("origin"),
            rect=NormRect.from_doc(doc["rect"]) if doc.get("rect") else None,
            text=doc.get("text"),
            level=ImaginationLevel(doc["level"]) if doc.get("level") else None,
        )


@dataclass
class TokenGroup:
    group_id: str
    members: tuple[str, ...]  # sorted, flat, size >= 2

    def to_doc(self) -> dict:
        return {"group_id": self.group_id, "members": list(self.members)}


@dataclass
class LexiconLink:
    link_id: str
    modifier: str  # instance or group id, never a subject
    target: str    # subject instance id

    def to_doc(self) -> dict:
        return {"link_id": self.link_id, "modifier": self.modifier, "target": self.target}


def parse_cross_refs(text: str) -> list[str]:
    """Every ``#name`` tag in order of appearance, duplicates preserved."""
    return CROSS_REF_PATTERN.findall(text)


class VisualLexicon:
    """The live panel document and its command vocabulary."""

    def __init__(self, lexicon_id: str = "lex_0001"):
        self.lexicon_id = lexicon_id
        self.revision = 0
        self.parent_entry_id: str | None = None
        self.instances: dict[str, TokenInstance] = {}
        self.groups: dict[str, TokenGroup] = {}
        self.links: dict[str, LexiconLink] = {}
        self.names: dict[str, str] = {}
        self._counters = {"ins": 0, "grp": 0, "lnk": 0}

    # -- id helpers ----------------------------------------------------

    def _next_id(self, prefix: str) -> str:
        self._counters[prefix] += 1
        return f"{prefix}_{self._counters[prefix]:04d}"

    def _get_instance(self, instance_id: str) -> TokenInstance:
        inst = self.instances.get(instance_id)
        if inst is None:
            raise UnknownInstance(f"no instance {instance_id!r}")
        return inst

    def _group_of(self, instance_id: str) -> TokenGroup | None:
        for group in self.groups.values():
            if instance_id in group.members:
                return group
        return None

    # -- commands --------------------------------------------------------

    def place_copy(self, source: SourceToken, rect: NormRect) -> str:
        """Drop a copy of a persistent token onto the panel.

        Concept sources materialize as textual instances carrying the
        keywords; only the rect's position is used for them.
        """
        if source.kind == TokenKind.CONCEPT:
            instance = TokenInstance(
                instance_id=self._next_id("ins"),
                kind=InstanceKind.TEXTUAL,
                position=(rect.x, rect.y),
                origin=source.token_id,
                text=", ".join(source.keywords),
            )
        else:
            kind = {
                TokenKind.SUBJECT: InstanceKind.SUBJECT,
                TokenKind.COLOR: InstanceKind.COLOR,
                TokenKind.STYLE: InstanceKind.STYLE,
            }[source.kind]
            instance = TokenInstance(
                instance_id=self._next_id("ins"),
                kind=kind,
                position=(rect.x, rect.y),
                origin=source.token_id,
                rect=rect,
            )
        self.instances[instance.instance_id] = instance
        self.revision += 1
        return instance.instance_id

    def create_textual(self, text: str, pos: tuple[float, float]) -> str:
        if not text:
            raise EmptyText("textual instances need nonempty text")
        instance = TokenInstance(
            instance_id=self._next_id("ins"),
            kind=InstanceKind.TEXTUAL,
            position=(float(pos[0]), float(pos[1])),
            text=text,
        )
        self.instances[instance.instance_id] = instance
        self.revision += 1
        return instance.instance_id

    def create_imaginative(self, level: ImaginationLevel, pos: tuple[float, float]) -> str:
        if level not in (ImaginationLevel.SMALL, ImaginationLevel.MEDIUM, ImaginationLevel.LARGE):
            raise BadCommand(f"imaginative level must be small|medium|large, got {level}")
        instance = TokenInstance(
            instance_id=self._next_id("ins"),
            kind=InstanceKind.IMAGINATIVE,
            position=(float(pos[0]), float(pos[1])),
            level=level,
        )
        self.instances[instance.instance_id] = instance
        self.revision += 1
        return instance.instance_id

    def set_geometry(
        self,
        instance_id: str,
        rect: NormRect | None = None,
        pos: tuple[float, float] | None = None,
    ) -> None:
        """Move or resize one instance.

        Subjects encode output placement through their rect; color and style
        rects encode weight by area; textual instances only move; imaginative
        rects snap to the nearest preset size. Moving a modifier is purely
        organizational and never changes compilation.
        """
        if (rect is None) == (pos is None):
            raise BadCommand("set_geometry takes exactly one of rect or pos")
        inst = self._get_instance(instance_id)
        if rect is not None:
            if inst.kind == InstanceKind.TEXTUAL:
                raise ResizeNotAllowed("textual instances have no size")
            if inst.kind == InstanceKind.IMAGINATIVE:
                inst.level = snap_level(rect.area())
                inst.position = (rect.x, rect.y)
            else:
                inst.rect = rect
                inst.position = (rect.x, rect.y)
        else:
            x, y = float(pos[0]), float(pos[1])
            if inst.kind in _SIZED_KINDS:
                inst.rect = NormRect(x, y, inst.rect.w, inst.rect.h)
            inst.position = (x, y)
        self.revision += 1

    def group(self, instance_ids: Sequence[str]) -> str:
        members = list(dict.fromkeys(instance_ids))
        if len(members) < 2:
            raise TooFewMembers(f"groups need >= 2 distinct members, got {len(members)}")
        for iid in members:
            inst = self._get_instance(iid)
            if inst.kind == InstanceKind.SUBJECT:
                raise SubjectInGroup(f"{iid} is a subject; groups bundle modifiers only")
            if self._group_of(iid) is not None:
                raise AlreadyGrouped(f"{iid} already belongs to a group")
        group = TokenGroup(group_id=self._next_id("grp"), members=tuple(sorted(members)))
        self.groups[group.group_id] = group
        self.revision += 1
        return group.group_id

    def ungroup(self, group_id: str) -> None:
        if group_id not in self.groups:
            raise UnknownGroup(f"no group {group_id!r}")
        del self.groups[group_id]
        for link_id in [lid for lid, ln in self.links.items() if ln.modifier == group_id]:
            del self.links[link_id]
        self.revision += 1

    def link(self, modifier: str, target: str) -> str:
        if modifier in self.instances:
            if self.instances[modifier].kind == InstanceKind.SUBJECT:
                raise InvalidEndpoint("a subject cannot modify another subject")
        elif modifier not in self.groups:
            raise UnknownInstance(f"no instance or group {modifier!r}")
        target_inst = self._get_instance(target)
        if target_inst.kind != InstanceKind.SUBJECT:
            raise InvalidEndpoint(f"link target {target!r} is not a subject")
        for ln in self.links.values():
            if ln.modifier == modifier and ln.target == target:
                raise DuplicateLink(f"{modifier} is already linked to {target}")
        link = LexiconLink(link_id=self._next_id("lnk"), modifier=modifier, target=target)
        self.links[link.link_id] = link
        self.revision += 1
        return link.link_id

    def unlink(self, link_id: str) -> None:
        if link_id not in self.links:
            raise UnknownLink(f"no link {link_id!r}")
        del self.links[link_id]
        self.revision += 1

    def set_name(self, instance_id: str, name: str) -> None:
        self._get_instance(instance_id)
        if not NAME_PATTERN.match(name or ""):
            raise BadName(f"name {name!r} must match [A-Za-z0-9_]+")
        holder = self.names.get(name)
        if holder is not None and holder != instance_id:
            raise NameTaken(f"name {name!r} already names {holder}")
        for old, iid in list(self.names.items()):
            if iid == instance_id:
                del self.names[old]
        self.names[name] = instance_id
        self.revision += 1

    def clear_panel(self) -> None:
        """Drop all instances, groups, links, and names; sources are untouched."""
        self.instances.clear()
        self.groups.clear()
        self.links.clear()
        self.names.clear()
        self.revision += 1

    # -- queries -----------------------------------------------------------

    def instances_in_order(self) -> list[TokenInstance]:
        return list(self.instances.values())

    def subjects_in_order(self) -> list[TokenInstance]:
        return [i for i in self.instances.values() if i.kind == InstanceKind.SUBJECT]

    def name_of(self, instance_id: str) -> str | None:
        for name, iid in self.names.items():
            if iid == instance_id:
                return name
        return None

    def check_integrity(self) -> list[str]:
        """Full-document referential check; returns human-readable problems."""
        problems = []
        known = set(self.instances)
        for group in self.groups.values():
            for member in group.members:
                if member not in known:
                    problems.append(f"group {group.group_id} references missing {member}")
        for ln in self.links.values():
            if ln.modifier not in known and ln.modifier not in self.groups:
                problems.append(f"link {ln.link_id} has missing modifier {ln.modifier}")
            if ln.target not in known:
                problems.append(f"link {ln.link_id} has missing target {ln.target}")
        for name, iid in self.names.items():
            if iid not in known:
                problems.append(f"name {name} references missing {iid}")
        return problems

    # -- serialization -----------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "lexicon_id": self.lexicon_id,
            "revision": self.revision,
            "parent_entry_id": self.parent_entry_id,
            "instances": [i.to_doc() for i in self.instances.values()],
            "groups": [g.to_doc() for g in self.groups.values()],
            "links": [ln.to_doc() for ln in self.links.values()],
            "names": dict(self.names),
        }

    def document_digest(self) -> str:
        return canon.digest(self.to_doc())

    def panel_digest(self) -> str:
        """Digest of panel contents only (no revision/lineage); used for
        state-idempotency checks."""
        doc = self.to_doc()
        doc.pop("revision")
        doc.pop("parent_entry_id")
        return canon.digest(doc)

    @classmethod
    def from_doc(cls, doc: dict) -> "VisualLexicon":
        lex = cls(lexicon_id=doc["lexicon_id"])
        lex.revision = int(doc["revision"])
        lex.parent_entry_id = doc.get("parent_entry_id")
        for inst_doc in doc["instances"]:
            inst = TokenInstance.from_doc(inst_doc)
            lex.instances[inst.instance_id] = inst
        for group_doc in doc["groups"]:
            lex.groups[group_doc["group_id"]] = TokenGroup(
                group_doc["group_id"], tuple(group_doc["members"])
            )
        for link_doc in doc["links"]:
            lex.links[link_doc["link_id"]] = LexiconLink(
                link_doc["link_id"], link_doc["modifier"], link_doc["target"]
            )
        lex.names = dict(doc["names"])
        for prefix in lex._counters:
            seqs = [
                int(xid.rsplit("_", 1)[-1])
                for xid in (*lex.instances, *lex.groups, *lex.links)
                if xid.startswith(prefix + "_") and xid.rsplit("_", 1)[-1].isdigit()
            ]
            lex._counters[prefix] = max(seqs, default=0)
        return lex

    def fork_copy(self, new_lexicon_id: str, parent_entry_id: str | None = None) -> "VisualLexicon":
        """Deep copy with fresh ids, preserved origins and names, revision 0."""
        fork = VisualLexicon(lexicon_id=new_lexicon_id)
        fork.parent_entry_id = parent_entry_id
        id_map: dict[str, str] = {}
        for inst in self.instances.values():
            new = copy.deepcopy(inst)
            new.instance_id = fork._next_id("ins")
            id_map[inst.instance_id] = new.instance_id
            fork.instances[new.instance_id] = new
        for group in self.groups.values():
            new_id = fork._next_id("grp")
            id_map[group.group_id] = new_id
            fork.groups[new_id] = TokenGroup(
                new_id, tuple(sorted(id_map[m] for m in group.members))
            )
        for ln in self.links.values():
            new_id = fork._next_id("lnk")
            fork.links[new_id] = LexiconLink(new_id, id_map[ln.modifier], id_map[ln.target])
        fork.names = {name: id_map[iid] for name, iid in self.names.items()}
        return fork


# ---------------------------------------------------------------------------
# Command envelopes
# ---------------------------------------------------------------------------


def _parse_rect(doc) -> NormRect:
    return NormRect.from_doc(doc)


def _parse_pos(doc) -> tuple[float, float]:
    if isinstance(doc, dict):
        return (float(doc["x"]), float(doc["y"]))
    return (float(doc[0]), float(doc[1]))


def apply_envelope(lex: VisualLexicon, board: MoodBoard, envelope: dict) -> dict:
    """Apply one wire-format command ``{op, args, expected_revision}``.

    Stale ``expected_revision`` is rejected before any work happens. Returns
    ``{"revision": r}`` plus the created id, when the op creates something.
    """
    try:
        op = envelope["op"]
        args = envelope.get("args", {}) or {}
        expected = int(envelope["expected_revision"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BadCommand(f"malformed command envelope: {exc}") from exc

    if expected != lex.revision:
        raise RevisionConflict(
            f"expected_revision {expected} != current revision {lex.revision}",
            expected=expected,
            current=lex.revision,
        )

    result: dict = {}
    try:
        if op == "place_copy":
            try:
                source = board.get_token(args["source"])
            except Exception as exc:
                raise UnknownSource(f"no source token {args.get('source')!r}") from exc
            result["instance_id"] = lex.place_copy(source, _parse_rect(args["rect"]))
        elif op == "create_textual":
            result["instance_id"] = lex.create_textual(args["text"], _parse_pos(args["pos"]))
        elif op == "create_imaginative":
            result["instance_id"] = lex.create_imaginative(
                ImaginationLevel(args["level"]), _parse_pos(args["pos"])
            )
        elif op == "set_geometry":
            lex.set_geometry(
                args["instance"],
                rect=_parse_rect(args["rect"]) if args.get("rect") else None,
                pos=_parse_pos(args["pos"]) if args.get("pos") else None,
            )
        elif op == "group":
            result["group_id"] = lex.group(list(args["instances"]))
        elif op == "ungroup":
            lex.ungroup(args["group"])
        elif op == "link":
            result["link_id"] = lex.link(args["modifier"], args["target"])
        elif op == "unlink":
            lex.unlink(args["link"])
        elif op == "set_name":
            lex.set_name(args["instance"], args["name"])
        elif op == "clear_panel":
            lex.clear_panel()
        else:
            raise UnknownOp(f"unknown command op {op!r}")
    except KeyError as exc:
        raise BadCommand(f"command {op!r} missing argument {exc}") from exc

    result["revision"] = lex.revision
    return result
