"""Tools that are one LLM completion over a fixed template: grounding a query
against a transcript, and free-form reasoning over knowledge, narration or
subtitles."""

from __future__ import annotations

import re
from typing import Sequence

from .. import templates
from ..planner import LLMBackend
from .temporal import Interval
from .transcripts import TranscriptLine, render_lines

NO_SEGMENT = "no relevant segment"

_SPAN_RE = re.compile(r"(?P<a>\d+(?:\.\d+)?)\s*-\s*(?P<b>\d+(?:\.\d+)?)")


def ground_from_transcript(
    kind: str,
    backend: LLMBackend,
    query: str,
    lines: Sequence[TranscriptLine],
    duration_s: float,
) -> tuple[bool, Interval | None, str]:
    """Ask the backend for a ``START - END`` segment over numbered transcript
    lines; anything unparseable counts as not found.

    kind is "narration" or "subtitle"; it only changes the prompt wording.
    Returned intervals are clamped to [0, duration_s].
    """
    if not lines:
        raise ValueError("ground_from_transcript requires a non-empty transcript")
    prompt = templates.prompt("ground_transcript").format(
        channel=kind, lines=render_lines(list(lines), numbered=True), query=query
    )
    reply = backend.complete(prompt, stop=[]).strip()
    if NO_SEGMENT in reply.casefold():
        return False, None, reply
    m = _SPAN_RE.search(reply)
    if not m:
        return False, None, f"unparseable grounding reply: {reply!r}"
    start = max(0.0, float(m.group("a")))
    end = min(duration_s, float(m.group("b")))
    if not start < end:
        return False, None, f"segment {reply!r} is empty after clamping to the video"
    return True, Interval(start, end), reply


def reason_over_text(
    kind: str, backend: LLMBackend, query: str, context: str | None = None
) -> str:
    """One completion with the kind-specific template; the reply is the answer.

    kind "knowledge" takes the rendered trace so far as context; "narration"
    and "subtitle" require their transcript text.
    """
    if kind not in ("knowledge", "narration", "subtitle"):
        raise ValueError(f"unknown reasoning kind {kind!r}")
    if kind != "knowledge" and not context:
        raise ValueError(f"{kind} reasoning requires context")
    prompt = templates.prompt(f"reason_{kind}").format(
        context=context or "(none)", query=query
    )
    return backend.complete(prompt, stop=[]).strip()
