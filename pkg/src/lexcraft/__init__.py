"""lexcraft: design tokens, visual lexicons, and staged image-generation plans.

A mood board turns reference images into persistent source tokens (subjects,
colors, styles, concepts). A visual lexicon arranges copies of those tokens
on a panel via a small command vocabulary (place, move, resize, group, link,
name). The compiler validates the lexicon and emits a deterministic
four-stage execution plan (layout, style, global color, local color), which
the renderer executes through a pluggable backend. Every generated result is
recorded into a forkable history.
"""

__version__ = "0.1.0"

DEFAULT_SEED = 0xB21C

from .colorlab import Lab, Rgb, WeightedPalette  # noqa: E402,F401
from .moodboard import ImageRef, MoodBoard, NormRect, SourceToken  # noqa: E402,F401
from .lexicon import ImaginationLevel, TokenInstance, VisualLexicon  # noqa: E402,F401
from .compiler import Diagnostic, ExecutionPlan, compile_lexicon, validate  # noqa: E402,F401
from .renderer import CompositorBackend, RenderArtifact, render  # noqa: E402,F401
from .history import HistoryEntry, HistoryStore  # noqa: E402,F401
