from __future__ import annotations

import random

import pytest

from mmagent.grammar import ActionCall
from mmagent.inspector import ResourceStore
from mmagent.toolset import default_registry


@pytest.fixture
def registry():
    return default_registry()


@pytest.fixture
def store(tmp_path):
    return ResourceStore(workspace=tmp_path / "ws")


def random_action(rng: random.Random) -> ActionCall:
    tool = rng.choice(
        ["caption", "text_detect", "asr", "knowledge_reason", "narration_ground",
         "object_detect", "temporal_reason", "a", "tool_2x"]
    )
    if rng.random() < 0.25:
        query = None
    else:
        alphabet = 'abc XYZ 0189 ?!.,;"\\\'()[]{}visual None'
        query = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 24)))
    shape = rng.random()
    if shape < 0.2:
        resources: list[int] = []
    elif shape < 0.8:
        resources = [rng.randint(0, 99)]
    else:
        resources = [rng.randint(0, 99) for _ in range(rng.randint(2, 4))]
    return ActionCall(tool=tool, query=query, resources=resources)
