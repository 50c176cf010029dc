"""Time-stamped transcript lines: the sidecar format shared by speech-to-text
output, declared subtitles, and frame-level narration.

Sidecar file format: one line per entry, ``START\\tEND\\ttext`` with times in
decimal seconds, UTF-8.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class TranscriptLine:
    start_s: float
    end_s: float
    text: str

    def __post_init__(self) -> None:
        if self.start_s > self.end_s:
            raise ValueError(f"transcript line ends before it starts: {self}")


def parse_sidecar(text: str) -> list[TranscriptLine]:
    lines: list[TranscriptLine] = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        start, end, content = raw.split("\t", 2)
        lines.append(TranscriptLine(float(start), float(end), content))
    _check_sorted(lines)
    return lines


def format_sidecar(lines: list[TranscriptLine]) -> str:
    return "".join(f"{line.start_s:g}\t{line.end_s:g}\t{line.text}\n" for line in lines)


def load_sidecar(path: Path) -> list[TranscriptLine]:
    return parse_sidecar(path.read_text(encoding="utf-8"))


def _check_sorted(lines: list[TranscriptLine]) -> None:
    for a, b in zip(lines, lines[1:]):
        if b.start_s < a.start_s:
            raise ValueError("transcript lines must be sorted by start time")


def slice_lines(
    lines: list[TranscriptLine], start_s: float, end_s: float
) -> list[TranscriptLine]:
    """Lines overlapping [start_s, end_s]; timestamps are kept absolute."""
    return [l for l in lines if l.end_s >= start_s and l.start_s <= end_s]


def render_lines(lines: list[TranscriptLine], numbered: bool = False) -> str:
    rendered = []
    for i, line in enumerate(lines):
        stamp = f"[{line.start_s:g}s-{line.end_s:g}s] {line.text}"
        rendered.append(f"{i + 1}. {stamp}" if numbered else stamp)
    return "\n".join(rendered)
