"""Prompt and observation templates, shipped as data files.

Template text is configuration, not code: the wording can change without
touching the loop, and golden tests pin the assembled output.  Files are
versioned by filename suffix.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

PROMPT_VERSION = "v1"


@lru_cache(maxsize=None)
def prompt(name: str) -> str:
    ref = resources.files("mmagent").joinpath(f"data/prompts/{name}_{PROMPT_VERSION}.txt")
    return ref.read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def observation_templates() -> dict:
    ref = resources.files("mmagent").joinpath("data/observation_templates.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def observation_text(key: str, **values: object) -> str:
    table = observation_templates()
    group, _, leaf = key.partition(".")
    return table[group][leaf].format(**values)
