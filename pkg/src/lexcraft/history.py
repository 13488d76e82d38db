"""Versioned store of generation results: each entry freezes a lexicon
snapshot, the plan it compiled to, and where the rendered artifact lives.

Entries are immutable full snapshots (lexicons are small, diffs would only
buy complexity) and lineage forms a forest: an entry's parent is the entry
its lexicon was forked from. Forking re-ids every instance so edits to the
fork can never alias state with the original.

Persistence is an append-only ndjson file per session, one canonical entry
document per line, so a crashed service recovers history by re-reading.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable
import time

from . import canon
from .compiler import ExecutionPlan, compile_lexicon
from .errors import HashMismatch, UnknownEntry
from .lexicon import VisualLexicon
from .moodboard import MoodBoard


@dataclass(frozen=True)
class HistoryEntry:
    entry_id: str
    session_id: str
    parent_id: str | None
    lexicon_doc: dict
    plan_doc: dict
    artifact_ref: str
    created_at: float

    @property
    def plan_hash(self) -> str:
        return self.plan_doc["plan_hash"]

    def to_doc(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "session_id": self.session_id,
            "parent_id": self.parent_id,
            "lexicon": self.lexicon_doc,
            "plan": self.plan_doc,
            "artifact": self.artifact_ref,
            "created_at": round(self.created_at, 6),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "HistoryEntry":
        return cls(
            entry_id=doc["entry_id"],
            session_id=doc["session_id"],
            parent_id=doc.get("parent_id"),
            lexicon_doc=doc["lexicon"],
            plan_doc=doc["plan"],
            artifact_ref=doc["artifact"],
            created_at=float(doc["created_at"]),
        )


class HistoryStore:
    """Append-only entry store, optionally persisted under ``root``.

    With a root, every session's entries live in history/<session>.ndjson
    and existing files are loaded at construction. Appends are serialized
    per session; reads hand out entries re-parsed from their canonical
    lines, so callers can never mutate stored state.
    """

    def __init__(self, root: str | Path | None = None, clock: Callable[[], float] = time.time):
        self._clock = clock
        self._dir = Path(root) / "history" if root is not None else None
        self._lines: dict[str, str] = {}
        self._by_session: dict[str, list[str]] = {}
        self._lock = threading.Lock()
        self._seq = 0
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            for path in sorted(self._dir.glob("*.ndjson")):
                for line in path.read_text(encoding="utf-8").splitlines():
                    if line.strip():
                        self._index(line)

    def _index(self, line: str) -> HistoryEntry:
        entry = HistoryEntry.from_doc(canon.loads(line))
        self._lines[entry.entry_id] = line
        self._by_session.setdefault(entry.session_id, []).append(entry.entry_id)
        suffix = entry.entry_id.rsplit("_", 1)[-1]
        if suffix.isdigit():
            self._seq = max(self._seq, int(suffix))
        return entry

    def record(
        self,
        session_id: str,
        lexicon: VisualLexicon,
        board: MoodBoard,
        plan: ExecutionPlan,
        artifact_ref: str,
    ) -> str:
        """Append an immutable entry; returns its id.

        The stored snapshot must actually compile to the stored plan, so a
        tampered or stale plan is rejected: the snapshot is recompiled
        against the board and the hashes compared.
        """
        snapshot = lexicon.to_doc()
        recompiled = compile_lexicon(VisualLexicon.from_doc(snapshot), board)
        if recompiled.plan_hash != plan.plan_hash:
            raise HashMismatch(
                "plan_hash does not match recompilation of the lexicon snapshot",
                expected=recompiled.plan_hash,
                got=plan.plan_hash,
            )
        with self._lock:
            self._seq += 1
            entry = HistoryEntry(
                entry_id=f"ent_{self._seq:04d}",
                session_id=session_id,
                parent_id=lexicon.parent_entry_id,
                lexicon_doc=snapshot,
                plan_doc=plan.to_doc(),
                artifact_ref=artifact_ref,
                created_at=self._clock(),
            )
            line = canon.dumps(entry.to_doc())
            self._index(line)
            if self._dir is not None:
                with (self._dir / f"{session_id}.ndjson").open("a", encoding="utf-8") as f:
                    f.write(line + "\n")
        return entry.entry_id

    def get(self, entry_id: str) -> HistoryEntry:
        line = self._lines.get(entry_id)
        if line is None:
            raise UnknownEntry(f"no history entry {entry_id!r}")
        return HistoryEntry.from_doc(canon.loads(line))

    def list(self, session_id: str) -> list[HistoryEntry]:
        return [self.get(eid) for eid in self._by_session.get(session_id, [])]

    def fork(self, entry_id: str, new_lexicon_id: str) -> VisualLexicon:
        """Rebuild the stored snapshot as a fresh live lexicon with new ids,
        revision 0, and lineage pointing back at the entry."""
        entry = self.get(entry_id)
        snapshot = VisualLexicon.from_doc(entry.lexicon_doc)
        return snapshot.fork_copy(new_lexicon_id, parent_entry_id=entry_id)
