"""Domain error hierarchy.

Every error carries a stable ``code`` (mirrored on the wire by the service)
and an HTTP status class so transport layers never invent their own mapping.
"""

from __future__ import annotations

from typing import Any


class LexcraftError(Exception):
    """Base class for all domain errors."""

    code = "Internal"
    http_status = 400

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def to_doc(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


def _error(name: str, status: int = 400) -> type[LexcraftError]:
    return type(name, (LexcraftError,), {"code": name, "http_status": status})


# colorlab
EmptyInput = _error("EmptyInput")
InvalidK = _error("InvalidK")
DimensionMismatch = _error("DimensionMismatch")
EmptyPalette = _error("EmptyPalette")
NonPaletteColor = _error("NonPaletteColor")

# moodboard
DecodeError = _error("DecodeError")
EmptyMask = _error("EmptyMask")
KindMismatch = _error("KindMismatch")
ProviderError = _error("ProviderError", 502)
EmptyKeywords = _error("EmptyKeywords")
UnknownImage = _error("UnknownImage", 404)
UnknownToken = _error("UnknownToken", 404)

# lexicon
UnknownSource = _error("UnknownSource", 404)
EmptyText = _error("EmptyText")
ResizeNotAllowed = _error("ResizeNotAllowed")
UnknownInstance = _error("UnknownInstance", 404)
UnknownGroup = _error("UnknownGroup", 404)
UnknownLink = _error("UnknownLink", 404)
AlreadyGrouped = _error("AlreadyGrouped")
SubjectInGroup = _error("SubjectInGroup")
TooFewMembers = _error("TooFewMembers")
InvalidEndpoint = _error("InvalidEndpoint")
DuplicateLink = _error("DuplicateLink")
NameTaken = _error("NameTaken")
BadName = _error("BadName")
InvalidRect = _error("InvalidRect")
BadCommand = _error("BadCommand")
UnknownOp = _error("UnknownOp")
RevisionConflict = _error("RevisionConflict", 409)

# compiler
ValidationFailed = _error("ValidationFailed", 422)
StrictWarnings = _error("StrictWarnings", 422)

# renderer
BackendError = _error("BackendError", 500)

# history
HashMismatch = _error("HashMismatch", 409)
UnknownEntry = _error("UnknownEntry", 404)

# service
UnknownSession = _error("UnknownSession", 404)
UnknownLexicon = _error("UnknownLexicon", 404)
UnknownArtifact = _error("UnknownArtifact", 404)
