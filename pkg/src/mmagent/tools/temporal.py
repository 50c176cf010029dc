"""Rule-based temporal reasoning over a video timeline.

Queries look like ``middle`` or ``after: 3 - 6``.  Absolute words (beginning,
middle, end) pick a segment of a 5-way equal partition of the video; relative
words (before, after) partition into 8 segments, locate the segment holding
the given span's midpoint, and step to the adjacent one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

ABSOLUTE_WORDS = ("beginning", "middle", "end")
RELATIVE_WORDS = ("before", "after")

ABSOLUTE_PARTS = 5
RELATIVE_PARTS = 8

# word of a 5-way partition: beginning -> 1st, middle -> 3rd, end -> 5th
_ABSOLUTE_SEGMENT = {"beginning": 0, "middle": 2, "end": 4}

_QUERY_RE = re.compile(
    r"^\s*(?P<word>[a-z]+)\s*(?::\s*(?P<a>\d+(?:\.\d+)?)\s*-\s*(?P<b>\d+(?:\.\d+)?)\s*)?$"
)


class QueryFormatError(Exception):
    pass


@dataclass(frozen=True)
class TemporalQuery:
    word: str
    span: tuple[float, float] | None = None


@dataclass(frozen=True)
class Interval:
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not self.start_s < self.end_s:
            raise ValueError(f"empty interval ({self.start_s}, {self.end_s})")


def parse_temporal_query(text: str) -> TemporalQuery:
    """Parse ``word[: a - b]``; the span is required for relative words and
    forbidden for absolute ones."""
    m = _QUERY_RE.match(text)
    if not m:
        raise QueryFormatError(
            f"cannot parse temporal query {text!r}; expected 'word' or 'word: a - b'"
        )
    word = m.group("word")
    span: tuple[float, float] | None = None
    if m.group("a") is not None:
        span = (float(m.group("a")), float(m.group("b")))
    if word in ABSOLUTE_WORDS:
        if span is not None:
            raise QueryFormatError(f"'{word}' takes no time span")
    elif word in RELATIVE_WORDS:
        if span is None:
            raise QueryFormatError(f"'{word}' requires a time span, e.g. '{word}: 3 - 6'")
        if span[0] > span[1]:
            raise QueryFormatError(f"span {span[0]} - {span[1]} is reversed")
    else:
        raise QueryFormatError(
            f"unknown temporal word {word!r}; expected one of "
            f"{', '.join(ABSOLUTE_WORDS + RELATIVE_WORDS)}"
        )
    return TemporalQuery(word, span)


def _boundaries(duration_s: float, parts: int) -> list[float]:
    return [i * duration_s / parts for i in range(parts + 1)]


def _segment_containing(bounds: list[float], point: float) -> int:
    # Midpoints sitting exactly on a boundary belong to the earlier segment.
    for i in range(len(bounds) - 1):
        if point <= bounds[i + 1]:
            return i
    return len(bounds) - 2


def temporal_reason(query: TemporalQuery, duration_s: float) -> tuple[Interval, bool]:
    """Resolve a temporal query against a video of the given duration.

    Returns the interval and a clamp flag that is True when a relative query
    pointed past the video's edge and the boundary segment itself was
    returned.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    if query.word in ABSOLUTE_WORDS:
        bounds = _boundaries(duration_s, ABSOLUTE_PARTS)
        seg = _ABSOLUTE_SEGMENT[query.word]
        return Interval(bounds[seg], bounds[seg + 1]), False
    bounds = _boundaries(duration_s, RELATIVE_PARTS)
    a, b = query.span  # type: ignore[misc]
    midpoint = min(max((a + b) / 2, 0.0), duration_s)
    seg = _segment_containing(bounds, midpoint)
    target = seg - 1 if query.word == "before" else seg + 1
    clamped = False
    if target < 0 or target >= RELATIVE_PARTS:
        target = seg
        clamped = True
    return Interval(bounds[target], bounds[target + 1]), clamped
