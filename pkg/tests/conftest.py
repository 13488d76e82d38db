"""Shared fixtures.

The demo scene is session-scoped and must be treated as read-only; tests
that mutate state build their own boards and panels.
"""

from __future__ import annotations

import pathlib

import pytest

from lexcraft import demo

GOLDEN_DIR = pathlib.Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def demo_scene():
    """(board, lexicon, roles) for the owl/car/tree scene. Read-only."""
    return demo.build_owl_car_scene()


@pytest.fixture(scope="session")
def golden_dir() -> pathlib.Path:
    return GOLDEN_DIR
